//! Yang-Yang thermodynamics of the repulsive Lieb-Liniger gas.
//!
//! The dressed energy solves
//!
//! ```text
//! eps(k) = k^2 - mu - (T / 2 pi) Int dq  2c / (c^2 + (k - q)^2)  ln(1 + exp(-eps(q)/T))
//! ```
//!
//! and the pressure is `p = (T / 2 pi) Int dk ln(1 + exp(-eps(k)/T))`.
//!
//! `eps` is even, so everything is discretised on `[0, K]` with composite
//! Gauss-Legendre panels; the folded kernel is `K(k - q) + K(k + q)`. Panel
//! widths follow the distance to the nearest complex singularity of the
//! integrand: the kernel poles at `q = k +/- ic` and the Fermi-factor poles where
//! `eps(q) = +/- i pi T`. The discrete equation is solved by Newton's method
//! (its Jacobian `I - A diag(f)` is an M-matrix, so the iteration decreases
//! monotonically from `eps = k^2 - mu`), and `n = dp/dmu`, `s = dp/dT` come from
//! the linearised equations that share that Jacobian.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use nalgebra::{DMatrix, DVector, LU, Dyn};

use crate::error::{Error, Result};

/// Numerical settings for the dressed-energy solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    /// Gauss-Legendre nodes per panel.
    pub nodes_per_panel: usize,
    /// Lower bound on the number of nodes over the full line `[-K, K]`.
    pub min_nodes: usize,
    /// Panel widths are divided by this factor.
    pub density: f64,
    /// The cutoff is multiplied by this factor after the tail condition is met.
    pub cutoff_scale: f64,
    /// Required `eps(K) / T` at the cutoff.
    pub tail_exponent: f64,
    /// Sup-norm tolerance on Newton updates, relative to `max(1, |eps|)`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Automatic cutoff enlargements before giving up with a grid error.
    pub max_cutoff_extensions: usize,
    /// Relative tolerance for density inversion.
    pub density_rtol: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nodes_per_panel: 10,
            min_nodes: 200,
            density: 1.0,
            cutoff_scale: 1.0,
            tail_exponent: 36.0,
            tolerance: 1e-12,
            max_iterations: 10_000,
            max_cutoff_extensions: 8,
            density_rtol: 1e-12,
        }
    }
}

impl GridConfig {
    /// Same settings with `factor` times the node density and `cutoff` times the cutoff.
    pub fn refined(&self, factor: f64, cutoff: f64) -> Self {
        Self {
            density: self.density * factor,
            cutoff_scale: self.cutoff_scale * cutoff,
            min_nodes: (self.min_nodes as f64 * factor).ceil() as usize,
            ..*self
        }
    }

    fn validate(&self) -> Result<()> {
        if self.nodes_per_panel < 2 {
            return Err(Error::invalid("need at least two nodes per panel"));
        }
        if !(self.density > 0.0 && self.cutoff_scale >= 1.0 && self.tail_exponent > 0.0) {
            return Err(Error::invalid("grid density and tail exponent must be positive, cutoff scale >= 1"));
        }
        if !(self.tolerance > 0.0 && self.density_rtol > 0.0) {
            return Err(Error::invalid("tolerances must be positive"));
        }
        Ok(())
    }
}

/// Half-line quadrature: nodes in `(0, K)` with weights; the full rule is its mirror image.
#[derive(Debug, Clone, PartialEq)]
struct HalfGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    cutoff: f64,
}

/// `2c / (c^2 + x^2)`.
fn kernel(c: f64, x: f64) -> f64 {
    2.0 * c / (c * c + x * x)
}

fn kernel_prime(c: f64, x: f64) -> f64 {
    let d = c * c + x * x;
    -4.0 * c * x / (d * d)
}

/// `ln(1 + exp(-x))` without overflow.
pub(crate) fn log1p_exp_neg(x: f64) -> f64 {
    if x > 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// Fermi factor `1 / (1 + exp(x))`.
fn fermi(x: f64) -> f64 {
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// `exp(u^2) erfc(u)` for `u >= 0`.
fn erfcx(u: f64) -> f64 {
    if u < 25.0 {
        libm::erfc(u) * (u * u).exp()
    } else {
        let inv = 1.0 / (u * u);
        (1.0 - 0.5 * inv + 0.75 * inv * inv - 1.875 * inv * inv * inv) / (u * PI.sqrt())
    }
}

/// Free-particle contributions from `|k| > K` to `(p, n, s)`.
fn gaussian_tail(mu: f64, t: f64, cutoff: f64) -> (f64, f64, f64) {
    let u = cutoff / t.sqrt();
    let damp = ((mu - cutoff * cutoff) / t).exp();
    // Int_K^inf exp(-(k^2 - mu)/T) dk
    let g0 = damp * 0.5 * (PI * t).sqrt() * erfcx(u);
    // Int_K^inf k^2 exp(-(k^2 - mu)/T) dk
    let g2 = damp * t.powf(1.5) * (0.5 * u + 0.25 * PI.sqrt() * erfcx(u));
    let p = t * g0 / PI;
    let n = g0 / PI;
    let s = (g0 * (1.0 - mu / t) + g2 / t) / PI;
    (p, n, s)
}

/// Converged dressed energy on its quadrature grid.
#[derive(Debug, Clone)]
pub struct DressedEnergy {
    pub coupling: f64,
    pub chemical_potential: f64,
    pub temperature: f64,
    grid: HalfGrid,
    values: Vec<f64>,
    /// Sup-norm of the discrete equation at the returned values.
    pub residual: f64,
    pub iterations: usize,
    jacobian: LU<f64, Dyn, Dyn>,
    folded: DMatrix<f64>,
}

impl DressedEnergy {
    /// Nodes on `[-K, K]`, ascending.
    pub fn nodes(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.grid.nodes.iter().rev().map(|q| -q).collect();
        out.extend_from_slice(&self.grid.nodes);
        out
    }

    /// `eps` at [`nodes`](Self::nodes).
    pub fn values(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.values.iter().rev().copied().collect();
        out.extend_from_slice(&self.values);
        out
    }

    pub fn quadrature_weights(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.grid.weights.iter().rev().copied().collect();
        out.extend_from_slice(&self.grid.weights);
        out
    }

    pub fn half_nodes(&self) -> &[f64] {
        &self.grid.nodes
    }

    pub fn half_values(&self) -> &[f64] {
        &self.values
    }

    pub fn node_count(&self) -> usize {
        2 * self.grid.nodes.len()
    }

    pub fn cutoff(&self) -> f64 {
        self.grid.cutoff
    }

    /// Nystrom interpolant of `eps` at any real `k`.
    pub fn value_at(&self, k: f64) -> f64 {
        interpolate(
            self.coupling,
            self.chemical_potential,
            self.temperature,
            &self.grid,
            &self.values,
            k,
        )
        .0
    }

    /// Zero of `eps` on `k > 0`, if the dressed energy changes sign.
    pub fn fermi_point(&self) -> Option<f64> {
        let idx = self.values.iter().position(|&e| e > 0.0)?;
        let mut lo = if idx == 0 { 0.0 } else { self.grid.nodes[idx - 1] };
        let mut hi = self.grid.nodes[idx];
        if self.value_at(lo) > 0.0 {
            return None;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.value_at(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    fn fermi_factors(&self) -> Vec<f64> {
        self.values.iter().map(|e| fermi(e / self.temperature)).collect()
    }

    fn derivatives(&self) -> Derivatives {
        let t = self.temperature;
        let m = self.values.len();
        let f = self.fermi_factors();
        let log_term: Vec<f64> = self.values.iter().map(|e| log1p_exp_neg(e / t)).collect();

        // J eps_mu = -1
        let rhs_mu = DVector::from_element(m, -1.0);
        let eps_mu = self.jacobian.solve(&rhs_mu).expect("nonsingular M-matrix");
        // J eps_T = -A (ln(1 + e^{-x}) + x f)
        let h = DVector::from_iterator(
            m,
            (0..m).map(|j| log_term[j] + self.values[j] / t * f[j]),
        );
        let rhs_t = -(&self.folded * h);
        let eps_t = self.jacobian.solve(&rhs_t).expect("nonsingular M-matrix");
        // J eps_mumu = A (f_eps eps_mu^2), f_eps = -f (1 - f) / T
        let src = DVector::from_iterator(
            m,
            (0..m).map(|j| -f[j] * (1.0 - f[j]) / t * eps_mu[j] * eps_mu[j]),
        );
        let eps_mumu = self.jacobian.solve(&(&self.folded * &src)).expect("nonsingular M-matrix");

        let w = &self.grid.weights;
        let mut n = 0.0;
        let mut s = 0.0;
        let mut dn_dmu = 0.0;
        let mut kinetic = 0.0;
        let mut p = 0.0;
        for j in 0..m {
            let rho = -f[j] * eps_mu[j];
            p += w[j] * t * log_term[j];
            n += w[j] * rho;
            s += w[j] * (log_term[j] + self.values[j] / t * f[j] - f[j] * eps_t[j]);
            dn_dmu -= w[j] * (src[j] + f[j] * eps_mumu[j]);
            let k = self.grid.nodes[j];
            kinetic += w[j] * k * k * rho;
        }
        let (p_tail, n_tail, s_tail) = gaussian_tail(self.chemical_potential, t, self.grid.cutoff);
        Derivatives {
            pressure: p / PI + p_tail,
            density: n / PI + n_tail,
            entropy_density: s / PI + s_tail,
            compressibility: dn_dmu / PI + n_tail / t,
            kinetic_energy_density: kinetic / PI,
        }
    }
}

struct Derivatives {
    pressure: f64,
    density: f64,
    entropy_density: f64,
    compressibility: f64,
    kinetic_energy_density: f64,
}

/// `(eps(k), eps'(k))` from the discrete solution.
fn interpolate(c: f64, mu: f64, t: f64, grid: &HalfGrid, values: &[f64], k: f64) -> (f64, f64) {
    let mut conv = 0.0;
    let mut dconv = 0.0;
    for ((&q, &w), &e) in grid.nodes.iter().zip(&grid.weights).zip(values) {
        let g = w * t * log1p_exp_neg(e / t);
        conv += (kernel(c, k - q) + kernel(c, k + q)) * g;
        dconv += (kernel_prime(c, k - q) + kernel_prime(c, k + q)) * g;
    }
    (k * k - mu - conv / (2.0 * PI), 2.0 * k - dconv / (2.0 * PI))
}

/// Largest panel width at `q` that keeps Gauss-Legendre near machine precision.
fn local_width(c: f64, t: f64, eps: f64, slope: f64) -> f64 {
    let mag = (eps * eps + (PI * t) * (PI * t)).sqrt();
    let slope = slope.abs().max(1e-300);
    // Fermi-factor poles where eps = +/- i pi T.
    let mut w = (mag / slope).min(mag.sqrt());
    // Boltzmann tail: limit the exponential growth across one panel, relaxed where it is tiny.
    if eps > 0.0 {
        w = w.min(4.0 * t / slope * (eps / (20.0 * t)).exp());
    }
    w.min(c)
}

fn design_grid(
    cutoff: f64,
    c: f64,
    t: f64,
    estimate: &dyn Fn(f64) -> (f64, f64),
    cfg: &GridConfig,
    rule: &GaussLegendre,
) -> HalfGrid {
    let width = |q: f64| {
        let (e, d) = estimate(q);
        local_width(c, t, e, d).min(cutoff * 0.5) / cfg.density
    };
    let mut panels: Vec<(f64, f64)> = Vec::new();
    let mut a = 0.0;
    let min_width = cutoff * 1e-14;
    while a < cutoff {
        // Largest h no wider than the local width anywhere on the panel.
        let fits = |h: f64| h <= width(a + 0.5 * h).min(width((a + h).min(cutoff)));
        let mut hi = width(a);
        let mut h = hi;
        if !fits(hi) {
            let mut lo = hi;
            while !fits(lo) && lo > min_width {
                hi = lo;
                lo *= 0.25;
            }
            for _ in 0..30 {
                let mid = (lo * hi).sqrt();
                if fits(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            h = lo;
        }
        h = h.max(min_width);
        let mut b = a + h;
        if b > cutoff || cutoff - b < 0.25 * h {
            b = cutoff;
        }
        panels.push((a, b));
        a = b;
    }
    let per = cfg.nodes_per_panel;
    let min_half = cfg.min_nodes.div_ceil(2);
    while panels.len() * per < min_half {
        // Split the widest panel.
        let (idx, _) = panels
            .iter()
            .enumerate()
            .map(|(i, (a, b))| (i, b - a))
            .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        let (a, b) = panels[idx];
        let mid = 0.5 * (a + b);
        panels[idx] = (a, mid);
        panels.insert(idx + 1, (mid, b));
    }

    let mut nodes = Vec::with_capacity(panels.len() * per);
    let mut weights = Vec::with_capacity(panels.len() * per);
    for (a, b) in panels {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for &(x, w) in rule.as_node_weight_pairs() {
            nodes.push(mid + half * x);
            weights.push(half * w);
        }
    }
    HalfGrid {
        nodes,
        weights,
        cutoff,
    }
}

/// Newton iteration for the discrete dressed-energy equation on a fixed grid.
fn solve_on_grid(
    c: f64,
    mu: f64,
    t: f64,
    grid: HalfGrid,
    guess: Option<Vec<f64>>,
    cfg: &GridConfig,
) -> Result<DressedEnergy> {
    let m = grid.nodes.len();
    let inv2pi = 0.5 / PI;
    let folded = DMatrix::from_fn(m, m, |i, j| {
        let (k, q) = (grid.nodes[i], grid.nodes[j]);
        grid.weights[j] * (kernel(c, k - q) + kernel(c, k + q)) * inv2pi
    });
    let bare: Vec<f64> = grid.nodes.iter().map(|k| k * k - mu).collect();
    let mut eps = DVector::from_vec(guess.unwrap_or_else(|| bare.clone()));

    let residual_of = |eps: &DVector<f64>| -> DVector<f64> {
        let g = DVector::from_iterator(m, eps.iter().map(|e| t * log1p_exp_neg(e / t)));
        let conv = &folded * g;
        DVector::from_iterator(m, (0..m).map(|i| eps[i] - bare[i] + conv[i]))
    };
    let jacobian_at = |eps: &DVector<f64>| -> DMatrix<f64> {
        let mut jac = -folded.clone();
        for j in 0..m {
            let f = fermi(eps[j] / t);
            for i in 0..m {
                jac[(i, j)] *= f;
            }
        }
        for i in 0..m {
            jac[(i, i)] += 1.0;
        }
        jac
    };

    let mut res = residual_of(&eps);
    let mut norm = res.amax();
    let max_iter = cfg.max_iterations.min(500);
    for iter in 0..max_iter {
        let lu = jacobian_at(&eps).lu();
        let Some(step) = lu.solve(&(-&res)) else {
            return Err(Error::SolverFailure {
                solver: "dressed-energy newton",
                iterations: iter,
                residual: norm,
                context: " (singular Jacobian)".into(),
            });
        };
        let scale = eps.amax().max(1.0);
        let step_norm = step.amax();
        let mut damping = 1.0;
        let mut next = &eps + &step;
        let mut next_res = residual_of(&next);
        while next_res.amax() > norm && damping > 1e-6 && step_norm > cfg.tolerance * scale {
            damping *= 0.5;
            next = &eps + damping * &step;
            next_res = residual_of(&next);
        }
        eps = next;
        res = next_res;
        norm = res.amax();
        if step_norm <= cfg.tolerance * scale {
            let jacobian = jacobian_at(&eps).lu();
            return Ok(DressedEnergy {
                coupling: c,
                chemical_potential: mu,
                temperature: t,
                grid,
                values: eps.iter().copied().collect(),
                residual: norm,
                iterations: iter + 1,
                jacobian,
                folded,
            });
        }
    }
    Err(Error::SolverFailure {
        solver: "dressed-energy newton",
        iterations: max_iter,
        residual: norm,
        context: format!(" at c = {c}, mu = {mu}, T = {t}"),
    })
}

fn check_inputs(c: f64, mu: f64, t: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("coupling must be positive and finite, got {c}")));
    }
    if !mu.is_finite() {
        return Err(Error::invalid("chemical potential must be finite"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("temperature must be positive, got {t}")));
    }
    Ok(())
}

/// Solves the dressed-energy equation at `(c, mu, T)`.
///
/// The grid is rebuilt from the previous solution until it stops moving, and the
/// cutoff is enlarged until `eps(K) >= tail_exponent * T`.
pub fn solve_dressed_energy(c: f64, mu: f64, t: f64, cfg: &GridConfig) -> Result<DressedEnergy> {
    check_inputs(c, mu, t)?;
    cfg.validate()?;
    let rule = GaussLegendre::new(NonZeroUsize::new(cfg.nodes_per_panel).expect("validated"));
    let mut cutoff = (mu.max(0.0) + cfg.tail_exponent * t).sqrt();
    let mut extensions = 0;
    let mut previous: Option<DressedEnergy> = None;
    const MAX_PASSES: usize = 6;

    for _ in 0..(MAX_PASSES + cfg.max_cutoff_extensions) {
        let grid = match &previous {
            None => design_grid(cutoff * cfg.cutoff_scale, c, t, &|q| (q * q - mu, 2.0 * q), cfg, &rule),
            Some(prev) => design_grid(
                cutoff * cfg.cutoff_scale,
                c,
                t,
                &|q| interpolate(c, mu, t, &prev.grid, &prev.values, q),
                cfg,
                &rule,
            ),
        };
        let guess = previous.as_ref().map(|prev| {
            grid.nodes
                .iter()
                .map(|&q| interpolate(c, mu, t, &prev.grid, &prev.values, q).0)
                .collect::<Vec<_>>()
        });
        let sol = solve_on_grid(c, mu, t, grid, guess.clone(), cfg)?;

        let edge = sol.value_at(cutoff);
        if edge < cfg.tail_exponent * t {
            extensions += 1;
            if extensions > cfg.max_cutoff_extensions {
                return Err(Error::Grid(format!(
                    "eps(K)/T = {:.3} < {} at K = {cutoff:.6} after {} extensions",
                    edge / t,
                    cfg.tail_exponent,
                    cfg.max_cutoff_extensions
                )));
            }
            cutoff = (cutoff * cutoff + (cfg.tail_exponent * t - edge)).sqrt() * 1.02;
            previous = Some(sol);
            continue;
        }
        if let (Some(prev), Some(g)) = (&previous, &guess) {
            let moved = g
                .iter()
                .zip(&sol.values)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let scale = sol.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            if moved <= 1e3 * cfg.tolerance * scale && prev.grid.cutoff == sol.grid.cutoff {
                return Ok(sol);
            }
        }
        previous = Some(sol);
    }
    previous.ok_or_else(|| Error::Grid("no solution".into()))
}

/// `p = (T / 2 pi) Int ln(1 + exp(-eps/T)) dk`, including the Gaussian tail beyond the cutoff.
pub fn pressure(de: &DressedEnergy) -> f64 {
    let t = de.temperature;
    let body: f64 = de
        .grid
        .weights
        .iter()
        .zip(&de.values)
        .map(|(w, e)| w * t * log1p_exp_neg(e / t))
        .sum();
    body / PI + gaussian_tail(de.chemical_potential, t, de.grid.cutoff).0
}

/// Equilibrium point of the gas in the grand canonical description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoState {
    pub coupling: f64,
    pub chemical_potential: f64,
    pub temperature: f64,
    pub pressure: f64,
    pub density: f64,
    pub entropy_density: f64,
    /// `-p + mu n + T s`.
    pub energy_density: f64,
    /// `dn/dmu` at fixed `T`.
    pub compressibility: f64,
    /// `Int k^2 rho(k) dk` from the root density `rho = -f d(eps)/d(mu) / 2 pi`.
    pub kinetic_energy_density: f64,
}

impl ThermoState {
    fn from_solution(de: &DressedEnergy) -> Self {
        let d = de.derivatives();
        let (mu, t) = (de.chemical_potential, de.temperature);
        Self {
            coupling: de.coupling,
            chemical_potential: mu,
            temperature: t,
            pressure: d.pressure,
            density: d.density,
            entropy_density: d.entropy_density,
            energy_density: -d.pressure + mu * d.density + t * d.entropy_density,
            compressibility: d.compressibility,
            kinetic_energy_density: d.kinetic_energy_density,
        }
    }
}

pub fn thermo_state(c: f64, mu: f64, t: f64, cfg: &GridConfig) -> Result<ThermoState> {
    let de = solve_dressed_energy(c, mu, t, cfg)?;
    Ok(ThermoState::from_solution(&de))
}

/// Chemical potential giving density `n_target` at `(c, T)`.
pub fn mu_from_density(c: f64, n_target: f64, t: f64, cfg: &GridConfig) -> Result<f64> {
    invert_density(c, n_target, t, cfg, None).map(|s| s.chemical_potential)
}

/// Density inversion returning the full state; `guess` seeds the search.
///
/// Brackets the root by outward steps, then refines with Newton steps on the
/// exact compressibility, falling back to bisection whenever a step leaves the bracket.
pub fn invert_density(
    c: f64,
    n_target: f64,
    t: f64,
    cfg: &GridConfig,
    guess: Option<f64>,
) -> Result<ThermoState> {
    if !(n_target > 0.0 && n_target.is_finite()) {
        return Err(Error::invalid(format!("density must be positive, got {n_target}")));
    }
    check_inputs(c, 0.0, t)?;
    let mu0 = guess.unwrap_or_else(|| initial_mu(c, n_target, t));
    let eval = |mu: f64| thermo_state(c, mu, t, cfg);

    let mut state = eval(mu0)?;
    let mut lo: Option<ThermoState> = None;
    let mut hi: Option<ThermoState> = None;
    let place = |s: ThermoState, lo: &mut Option<ThermoState>, hi: &mut Option<ThermoState>| {
        if s.density < n_target {
            *lo = Some(s);
        } else {
            *hi = Some(s);
        }
    };
    place(state, &mut lo, &mut hi);

    // Newton from the guess while it stays sane, then bracket.
    let converged = |s: &ThermoState| (s.density - n_target).abs() <= cfg.density_rtol * n_target;
    let mut step_size = t.max(0.1 * mu0.abs()).max(1e-3 * n_target * n_target);
    for iter in 0..200 {
        if converged(&state) {
            return Ok(state);
        }
        let newton = state.chemical_potential - (state.density - n_target) / state.compressibility;
        let candidate = match (&lo, &hi) {
            (Some(l), Some(h)) => {
                let (a, b) = (l.chemical_potential, h.chemical_potential);
                if newton.is_finite() && newton > a.min(b) && newton < a.max(b) {
                    newton
                } else {
                    0.5 * (a + b)
                }
            }
            (Some(l), None) => {
                let fallback = l.chemical_potential + step_size;
                step_size *= 2.0;
                if newton.is_finite() && newton > l.chemical_potential {
                    newton.min(fallback)
                } else {
                    fallback
                }
            }
            (None, Some(h)) => {
                let fallback = h.chemical_potential - step_size;
                step_size *= 2.0;
                if newton.is_finite() && newton < h.chemical_potential {
                    newton.max(fallback)
                } else {
                    fallback
                }
            }
            (None, None) => unreachable!(),
        };
        if let (Some(l), Some(h)) = (&lo, &hi) {
            let width = (h.chemical_potential - l.chemical_potential).abs();
            if width <= 4.0 * f64::EPSILON * state.chemical_potential.abs().max(1.0) {
                if (state.density - n_target).abs() <= 1e-8 * n_target {
                    return Ok(state);
                }
                return Err(Error::Inversion(format!(
                    "bracket collapsed at mu = {} with n = {} (target {n_target}) after {iter} steps",
                    state.chemical_potential, state.density
                )));
            }
        }
        state = eval(candidate)?;
        place(state, &mut lo, &mut hi);
        if step_size > 1e12 {
            return Err(Error::Inversion(format!(
                "could not bracket density {n_target} at c = {c}, T = {t}"
            )));
        }
    }
    Err(Error::Inversion(format!(
        "no convergence for density {n_target} at c = {c}, T = {t}"
    )))
}

fn initial_mu(c: f64, n: f64, t: f64) -> f64 {
    let degenerate = (PI * n).powi(2).min(2.0 * c * n);
    let classical = t * (2.0 * n * (PI / t).sqrt()).ln();
    if classical < -t {
        classical
    } else {
        degenerate
    }
}

/// Specific heat `T ds/dT` at fixed `mu`, by central difference with step
/// `max(1e-4, 1e-3 T)` (capped at `T/2`).
pub fn specific_heat(c: f64, mu: f64, t: f64, cfg: &GridConfig) -> Result<f64> {
    check_inputs(c, mu, t)?;
    let h = (1e-4f64).max(1e-3 * t).min(0.5 * t);
    let up = thermo_state(c, mu, t + h, cfg)?;
    let down = thermo_state(c, mu, t - h, cfg)?;
    Ok(t * (up.entropy_density - down.entropy_density) / (2.0 * h))
}

/// Heat capacity per length at fixed density, `T (ds/dT)_n`, from the fixed-`mu` one:
/// `c_n = c_mu - T (dn/dT)^2 / (dn/dmu)`.
pub fn specific_heat_at_density(c: f64, mu: f64, t: f64, cfg: &GridConfig) -> Result<f64> {
    check_inputs(c, mu, t)?;
    let h = (1e-4f64).max(1e-3 * t).min(0.5 * t);
    let up = thermo_state(c, mu, t + h, cfg)?;
    let down = thermo_state(c, mu, t - h, cfg)?;
    let mid = thermo_state(c, mu, t, cfg)?;
    let c_mu = t * (up.entropy_density - down.entropy_density) / (2.0 * h);
    let dn_dt = (up.density - down.density) / (2.0 * h);
    Ok(c_mu - t * dn_dt * dn_dt / mid.compressibility)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn stable_helpers() {
        assert_eq!(log1p_exp_neg(800.0), 0.0);
        assert_eq!(log1p_exp_neg(-800.0), 800.0);
        assert_relative_eq!(log1p_exp_neg(0.3), (1.0 + (-0.3f64).exp()).ln(), max_relative = 1e-15);
        assert_eq!(fermi(-1000.0), 1.0);
        assert_eq!(fermi(1000.0), 0.0);
        for u in [0.5, 3.0, 10.0, 24.9] {
            assert_relative_eq!(erfcx(u), libm::erfc(u) * (u * u).exp(), max_relative = 1e-12);
        }
        assert_relative_eq!(erfcx(25.0), erfcx(24.999999), max_relative = 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = GridConfig::default();
        assert!(solve_dressed_energy(0.0, 1.0, 1.0, &cfg).is_err());
        assert!(solve_dressed_energy(1.0, 1.0, 0.0, &cfg).is_err());
        assert!(mu_from_density(1.0, -1.0, 1.0, &cfg).is_err());
    }

    #[test]
    fn dressed_energy_invariants() {
        let cfg = GridConfig::default();
        let de = solve_dressed_energy(1.0, 2.0, 1.0, &cfg).unwrap();
        assert!(de.node_count() >= cfg.min_nodes);
        let (nodes, vals) = (de.nodes(), de.values());
        let m = nodes.len();
        for i in 0..m / 2 {
            assert_eq!(nodes[i], -nodes[m - 1 - i]);
            assert_eq!(vals[i], vals[m - 1 - i]);
        }
        for k in [0.1, 0.7, 2.3] {
            assert_eq!(de.value_at(k), de.value_at(-k));
        }
        assert!(de.residual <= 1e-10);
        // Tail: eps(K) exceeds the threshold and approaches k^2 - mu from below.
        let k = de.cutoff();
        let edge = de.value_at(k);
        assert!(edge >= 36.0);
        let bare = k * k - 2.0;
        let p = pressure(&de);
        // Lorentzian tail of the convolution is bounded by 2 c p / (T (K - k*)^2) with k* the Fermi point.
        let kf = de.fermi_point().unwrap();
        assert!(edge < bare && bare - edge <= 2.0 * p / (k - kf).powi(2));
    }

    #[test]
    fn pressure_increases_with_mu() {
        let cfg = GridConfig::default();
        let ps: Vec<f64> = [-3.0, -1.0, 0.0, 1.0, 3.0]
            .iter()
            .map(|&mu| pressure(&solve_dressed_energy(2.0, mu, 0.7, &cfg).unwrap()))
            .collect();
        assert!(ps.windows(2).all(|w| w[0] < w[1]));
        let low = pressure(&solve_dressed_energy(2.0, -60.0, 1.0, &cfg).unwrap());
        assert!(low > 0.0 && low < 1e-25);
    }

    #[test]
    fn density_round_trip() {
        let cfg = GridConfig::default();
        for &(c, n, t) in &[(1.0, 1.0, 1.0), (3.0, 0.2, 5.0), (1.0, 15.0, 1.0), (2.0, 1.0, 0.02)] {
            let mu = mu_from_density(c, n, t, &cfg).unwrap();
            let s = thermo_state(c, mu, t, &cfg).unwrap();
            assert!((s.density - n).abs() <= 1e-8 * n, "c={c} n={n} t={t}: {}", s.density);
        }
        let a = mu_from_density(1.0, 0.5, 1.0, &cfg).unwrap();
        let b = mu_from_density(1.0, 0.6, 1.0, &cfg).unwrap();
        assert!(b > a);
    }

    #[test]
    fn compressibility_matches_finite_difference() {
        let cfg = GridConfig::default();
        let h = 1e-5;
        let s = thermo_state(1.5, 0.8, 0.6, &cfg).unwrap();
        let up = thermo_state(1.5, 0.8 + h, 0.6, &cfg).unwrap();
        let down = thermo_state(1.5, 0.8 - h, 0.6, &cfg).unwrap();
        assert_relative_eq!(s.compressibility, (up.density - down.density) / (2.0 * h), max_relative = 1e-7);
        assert_relative_eq!(s.density, (up.pressure - down.pressure) / (2.0 * h), max_relative = 1e-7);
    }
}
