//! The interaction-driven cycle in the thermodynamic limit.
//!
//! States are pinned by `(c, T, n)`; every evaluation inverts the density for `mu`.
//! The adiabats `A -> B` and `C -> D` are found by matching entropy densities at
//! fixed `n`.

use std::cell::Cell;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gibbs::CycleResult;
use crate::roots::{brent, golden_max};
use crate::tba::{invert_density, specific_heat, thermo_state, GridConfig, ThermoState};

/// Largest factor by which an entropy-matching bracket is widened.
const MAX_BRACKET_EXPANSION: u32 = 10;
/// Entropy matching stops at `|s - s_target| <= MATCH_RTOL * s_target`.
pub const MATCH_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TbaCycleSpec {
    pub c_a: f64,
    pub c_b: f64,
    pub t_a: f64,
    pub t_c: f64,
    pub density: f64,
    pub box_length: f64,
}

impl TbaCycleSpec {
    pub fn new(c_a: f64, c_b: f64, t_a: f64, t_c: f64, density: f64, box_length: f64) -> Result<Self> {
        let spec = Self {
            c_a,
            c_b,
            t_a,
            t_c,
            density,
            box_length,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_density(&self, density: f64) -> Result<Self> {
        Self::new(self.c_a, self.c_b, self.t_a, self.t_c, density, self.box_length)
    }

    fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if ![self.c_a, self.c_b, self.t_a, self.t_c, self.density, self.box_length]
            .into_iter()
            .all(positive)
        {
            return Err(Error::invalid("couplings, temperatures, density and length must be positive"));
        }
        if self.c_a > self.c_b {
            return Err(Error::invalid(format!("need c_A <= c_B, got {} > {}", self.c_a, self.c_b)));
        }
        if self.t_a >= self.t_c {
            return Err(Error::invalid(format!("need T_A < T_C, got {} >= {}", self.t_a, self.t_c)));
        }
        Ok(())
    }
}

/// Cycle result together with the equilibrium states at the four corners.
#[derive(Debug, Clone, PartialEq)]
pub struct TbaCycle {
    pub result: CycleResult,
    /// States A, B, C, D.
    pub corners: [ThermoState; 4],
}

fn state_at(c: f64, n: f64, t: f64, cfg: &GridConfig, warm: &Cell<Option<f64>>) -> Result<ThermoState> {
    let st = invert_density(c, n, t, cfg, warm.get())?;
    warm.set(Some(st.chemical_potential));
    Ok(st)
}

/// Temperature at which the gas with coupling `c_target` and density `n` has entropy density `s_target`.
pub fn match_entropy_temperature(
    c_target: f64,
    s_target: f64,
    n: f64,
    bracket: (f64, f64),
    cfg: &GridConfig,
) -> Result<f64> {
    match_entropy(c_target, s_target, n, bracket, None, cfg).map(|s| s.temperature)
}

fn match_entropy(
    c: f64,
    s_target: f64,
    n: f64,
    (mut lo, mut hi): (f64, f64),
    hint: Option<f64>,
    cfg: &GridConfig,
) -> Result<ThermoState> {
    if !(s_target > 0.0 && s_target.is_finite()) {
        return Err(Error::invalid(format!("target entropy must be positive, got {s_target}")));
    }
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::invalid(format!("bad temperature bracket [{lo}, {hi}]")));
    }
    let warm = Cell::new(None);
    let tol = MATCH_RTOL * s_target;
    let mut best: Option<ThermoState> = None;
    let mut eval = |t: f64| -> Result<f64> {
        let st = state_at(c, n, t, cfg, &warm)?;
        let g = st.entropy_density - s_target;
        if best.is_none_or(|b| g.abs() < (b.entropy_density - s_target).abs()) {
            best = Some(st);
        }
        Ok(g)
    };

    if let Some(t) = hint {
        if eval(t)?.abs() <= tol {
            return Ok(best.expect("just evaluated"));
        }
    }
    let mut g_lo = eval(lo)?;
    let mut g_hi = eval(hi)?;
    let mut widened = 0;
    while g_lo > 0.0 {
        widened += 1;
        if widened > MAX_BRACKET_EXPANSION {
            return Err(Error::Matching(format!(
                "entropy {s_target} below s(T = {lo}) at c = {c}, n = {n}"
            )));
        }
        hi = lo;
        g_hi = g_lo;
        lo *= 0.5;
        g_lo = eval(lo)?;
    }
    widened = 0;
    while g_hi < 0.0 {
        widened += 1;
        if widened > MAX_BRACKET_EXPANSION {
            return Err(Error::Matching(format!(
                "entropy {s_target} above s(T = {hi}) at c = {c}, n = {n}"
            )));
        }
        lo = hi;
        g_lo = g_hi;
        hi *= 2.0;
        g_hi = eval(hi)?;
    }
    let (_, g) = brent(&mut eval, (lo, g_lo), (hi, g_hi), 1e-15 * hi, 0.1 * tol, 200)?;
    let st = best.expect("evaluated");
    if g.abs() > tol && (st.entropy_density - s_target).abs() > tol {
        return Err(Error::Matching(format!(
            "entropy mismatch {} exceeds {tol} at c = {c}, n = {n}",
            g.abs()
        )));
    }
    Ok(st)
}

/// Full cycle at fixed density.
///
/// `Q2 = L [e(c_B, T_C) - e(c_B, T_B)]`, `Q4 = L [e(c_A, T_D) - e(c_A, T_A)]`.
pub fn run_tba_cycle(spec: &TbaCycleSpec, cfg: &GridConfig) -> Result<TbaCycle> {
    spec.validate()?;
    let n = spec.density;
    let a = invert_density(spec.c_a, n, spec.t_a, cfg, None)?;
    let c = invert_density(spec.c_b, n, spec.t_c, cfg, None)?;
    let b = match_entropy(
        spec.c_b,
        a.entropy_density,
        n,
        (spec.t_a / 3.0, spec.t_a * 3.0),
        Some(spec.t_a),
        cfg,
    )
    .map_err(|e| e.with_context("isentrope A -> B"))?;
    let d = match_entropy(
        spec.c_a,
        c.entropy_density,
        n,
        (spec.t_c / 3.0, spec.t_c * 3.0),
        Some(spec.t_c),
        cfg,
    )
    .map_err(|e| e.with_context("isentrope C -> D"))?;
    let l = spec.box_length;
    let q2 = l * (c.energy_density - b.energy_density);
    let q4 = l * (d.energy_density - a.energy_density);
    let result = CycleResult::assemble(q2, q4, Some(b.temperature), Some(d.temperature))?;
    Ok(TbaCycle {
        result,
        corners: [a, b, c, d],
    })
}

/// `(mu, T)` at the corners A, B, C, D.
pub fn cycle_trajectory(spec: &TbaCycleSpec, cfg: &GridConfig) -> Result<[(f64, f64); 4]> {
    let cycle = run_tba_cycle(spec, cfg)?;
    Ok(cycle.corners.map(|s| (s.chemical_potential, s.temperature)))
}

#[derive(Debug)]
pub struct ScanRow {
    pub density: f64,
    pub outcome: Result<CycleResult>,
}

impl ScanRow {
    /// `W / N = W / (n L)`.
    pub fn work_per_particle(&self, box_length: f64) -> Option<f64> {
        self.outcome
            .as_ref()
            .ok()
            .map(|r| r.work / (self.density * box_length))
    }
}

/// One cycle per density, evaluated in parallel; rows come back in input order.
pub fn density_scan(spec: &TbaCycleSpec, densities: &[f64], cfg: &GridConfig) -> Result<Vec<ScanRow>> {
    if densities.iter().any(|&n| !(n > 0.0 && n.is_finite())) {
        return Err(Error::invalid("scan densities must be positive"));
    }
    if densities.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("scan densities must be ascending"));
    }
    spec.validate()?;
    Ok(densities
        .par_iter()
        .map(|&n| ScanRow {
            density: n,
            outcome: spec
                .with_density(n)
                .and_then(|s| run_tba_cycle(&s, cfg))
                .map(|c| c.result),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMapPoint {
    pub chemical_potential: f64,
    pub temperature: f64,
    /// `T ds/dT` at fixed `mu`.
    pub specific_heat: f64,
    pub density: f64,
    pub entropy_density: f64,
}

/// Specific-heat map on a rectangular `(mu, T)` grid.
///
/// `cells` is row-major with temperature as the outer index:
/// `cells[i * mu_values.len() + j]` is at `(mu_values[j], temperature_values[i])`.
#[derive(Debug)]
pub struct PhaseMap {
    pub coupling: f64,
    pub mu_values: Vec<f64>,
    pub temperature_values: Vec<f64>,
    pub cells: Vec<Result<PhaseMapPoint>>,
}

impl PhaseMap {
    pub fn cell(&self, t_index: usize, mu_index: usize) -> &Result<PhaseMapPoint> {
        &self.cells[t_index * self.mu_values.len() + mu_index]
    }
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (count - 1) as f64
            }
        })
        .collect()
}

pub fn phase_point(c: f64, mu: f64, t: f64, cfg: &GridConfig) -> Result<PhaseMapPoint> {
    let st = thermo_state(c, mu, t, cfg)?;
    let cv = specific_heat(c, mu, t, cfg)?;
    if !(cv > 0.0) {
        return Err(Error::Domain(format!("non-positive specific heat {cv} at mu = {mu}, T = {t}")));
    }
    Ok(PhaseMapPoint {
        chemical_potential: mu,
        temperature: t,
        specific_heat: cv,
        density: st.density,
        entropy_density: st.entropy_density,
    })
}

/// Evenly spaced grid with `resolution = (mu points, T points)`.
pub fn phase_map(
    c: f64,
    mu_range: (f64, f64),
    t_range: (f64, f64),
    resolution: (usize, usize),
    cfg: &GridConfig,
) -> Result<PhaseMap> {
    let (n_mu, n_t) = resolution;
    if n_mu == 0 || n_t == 0 {
        return Err(Error::invalid("phase map needs at least one point per axis"));
    }
    if !(t_range.0 > 0.0 && t_range.1 >= t_range.0) || !(mu_range.1 >= mu_range.0) {
        return Err(Error::invalid("ranges must be ordered and temperatures positive"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid("coupling must be positive"));
    }
    let mu_values = linspace(mu_range.0, mu_range.1, n_mu);
    let temperature_values = linspace(t_range.0, t_range.1, n_t);
    let cells = (0..n_mu * n_t)
        .into_par_iter()
        .map(|idx| phase_point(c, mu_values[idx % n_mu], temperature_values[idx / n_mu], cfg))
        .collect();
    Ok(PhaseMap {
        coupling: c,
        mu_values,
        temperature_values,
        cells,
    })
}

/// Local maxima of the specific heat along `mu` at fixed `T`, as `(mu, n)` in ascending `mu`.
///
/// A coarse scan of `samples` points finds interior peaks; golden-section search refines
/// each between its neighbours. Above the critical point there are two: one on the
/// classical side and one on the degenerate (Luttinger-liquid) side.
pub fn specific_heat_ridges(
    c: f64,
    t: f64,
    mu_range: (f64, f64),
    samples: usize,
    cfg: &GridConfig,
) -> Result<Vec<(f64, f64)>> {
    if samples < 3 {
        return Err(Error::invalid("ridge search needs at least three samples"));
    }
    let mus = linspace(mu_range.0, mu_range.1, samples);
    let values = mus
        .par_iter()
        .map(|&mu| specific_heat(c, mu, t, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut ridges = Vec::new();
    for i in 1..samples - 1 {
        if values[i] > values[i - 1] && values[i] >= values[i + 1] {
            let (mu, _) = golden_max(
                |mu| specific_heat(c, mu, t, cfg),
                mus[i - 1],
                mus[i + 1],
                1e-6 * t.max(1e-3),
            )?;
            ridges.push((mu, thermo_state(c, mu, t, cfg)?.density));
        }
    }
    Ok(ridges)
}

/// The degenerate-side ridge separating the quantum-critical fan from the Luttinger liquid:
/// the specific-heat peak with the largest `mu` in the range.
pub fn tll_crossover(
    c: f64,
    t: f64,
    mu_range: (f64, f64),
    samples: usize,
    cfg: &GridConfig,
) -> Result<(f64, f64)> {
    specific_heat_ridges(c, t, mu_range, samples, cfg)?
        .last()
        .copied()
        .ok_or_else(|| {
            Error::Domain(format!(
                "no interior specific-heat maximum in [{}, {}] at T = {t}",
                mu_range.0, mu_range.1
            ))
        })
}
