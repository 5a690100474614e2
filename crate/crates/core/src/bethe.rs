//! Finite-N Lieb-Liniger gas in a hard-wall box.
//!
//! Eigenstates are labelled by strictly increasing positive integers
//! `I_1 < ... < I_N`; the quasimomenta solve the logarithmic Bethe equations
//!
//! ```text
//! L k_i = pi I_i - sum_{j != i} [ atan((k_i - k_j)/c) + atan((k_i + k_j)/c) ]
//! ```
//!
//! and the energy is `E = sum_i k_i^2` (units hbar = 2m = kB = 1).

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};
use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const DEFAULT_ROOT_TOL: f64 = 1e-12;
pub const DEFAULT_WEIGHT_CUTOFF: f64 = 1e-8;
pub const DEFAULT_MAX_STATES: usize = 1_000_000;

const MAX_NEWTON_ITERATIONS: usize = 200;
const MAX_LINE_SEARCH_HALVINGS: usize = 40;
const CONTINUATION_FACTOR: f64 = 0.7;

/// Working-substance parameters: `N` bosons in a box of length `L` with contact coupling `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasSpec {
    particle_count: usize,
    box_length: f64,
    coupling: f64,
}

impl GasSpec {
    /// `coupling` may be `f64::INFINITY` (Tonks-Girardeau gas).
    pub fn new(particle_count: usize, box_length: f64, coupling: f64) -> Result<Self> {
        if particle_count == 0 {
            return Err(Error::invalid("particle count must be at least 1"));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::invalid(format!(
                "box length must be positive and finite, got {box_length}"
            )));
        }
        if coupling.is_nan() || coupling < 0.0 {
            return Err(Error::invalid(format!(
                "coupling must be non-negative, got {coupling}"
            )));
        }
        Ok(Self {
            particle_count,
            box_length,
            coupling,
        })
    }

    pub fn particle_count(&self) -> usize {
        self.particle_count
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn density(&self) -> f64 {
        self.particle_count as f64 / self.box_length
    }

    pub fn with_coupling(&self, coupling: f64) -> Result<Self> {
        Self::new(self.particle_count, self.box_length, coupling)
    }
}

/// Strictly increasing positive integer quantum numbers labelling one eigenstate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuantumNumbers(Vec<u32>);

impl QuantumNumbers {
    pub fn new(values: Vec<u32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("quantum numbers must not be empty"));
        }
        if values[0] < 1 {
            return Err(Error::invalid("quantum numbers must be at least 1"));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!(
                "quantum numbers must be strictly increasing, got {values:?}"
            )));
        }
        Ok(Self(values))
    }

    /// `{1, 2, ..., N}`.
    pub fn ground(particle_count: usize) -> Self {
        Self((1..=particle_count as u32).collect())
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Free-fermion energy in units of `(pi/L)^2`.
    pub fn sum_of_squares(&self) -> u64 {
        self.0.iter().map(|&i| u64::from(i) * u64::from(i)).sum()
    }

    /// Neighbours one step up the lattice: one quantum number raised by one,
    /// keeping the tuple strictly increasing.
    fn successors(&self) -> impl Iterator<Item = (usize, QuantumNumbers)> + '_ {
        let n = self.0.len();
        (0..n).filter_map(move |i| {
            let raised = self.0[i] + 1;
            if i + 1 < n && raised >= self.0[i + 1] {
                return None;
            }
            let mut next = self.0.clone();
            next[i] = raised;
            Some((i, QuantumNumbers(next)))
        })
    }
}

impl fmt::Display for QuantumNumbers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// A solved eigenstate.
#[derive(Debug, Clone, PartialEq)]
pub struct BetheState {
    pub quantum_numbers: QuantumNumbers,
    pub roots: Vec<f64>,
    pub energy: f64,
    pub residual: f64,
}

impl BetheState {
    fn from_roots(quantum_numbers: QuantumNumbers, roots: Vec<f64>, residual: f64) -> Self {
        let energy = roots.iter().map(|k| k * k).sum();
        Self {
            quantum_numbers,
            roots,
            energy,
            residual,
        }
    }
}

/// Max-norm of the Bethe-equation residue at `roots`.
pub fn bethe_residual(roots: &[f64], qn: &QuantumNumbers, spec: &GasSpec) -> f64 {
    let mut out = vec![0.0; roots.len()];
    residual_into(roots, qn.values(), spec.box_length, spec.coupling, &mut out);
    max_abs(&out)
}

fn residual_into(k: &[f64], qn: &[u32], length: f64, c: f64, out: &mut [f64]) {
    for i in 0..k.len() {
        let mut phase = 0.0;
        for j in 0..k.len() {
            if j != i {
                phase += ((k[i] - k[j]) / c).atan() + ((k[i] + k[j]) / c).atan();
            }
        }
        out[i] = length * k[i] - PI * f64::from(qn[i]) + phase;
    }
}

fn jacobian(k: &[f64], length: f64, c: f64) -> DMatrix<f64> {
    let n = k.len();
    let c2 = c * c;
    let mut jac = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = length;
        for j in 0..n {
            if j == i {
                continue;
            }
            let d = k[i] - k[j];
            let s = k[i] + k[j];
            let a = c / (c2 + d * d);
            let b = c / (c2 + s * s);
            diag += a + b;
            jac[(i, j)] = b - a;
        }
        jac[(i, i)] = diag;
    }
    jac
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn is_ordered_positive(k: &[f64]) -> bool {
    k[0] > 0.0 && k.windows(2).all(|w| w[0] < w[1])
}

/// First-order asymptotic inversion of the Bethe equations.
fn asymptotic_guess(qn: &[u32], length: f64, c: f64) -> Vec<f64> {
    let n = qn.len() as f64;
    let eff = length + 2.0 * (n - 1.0) / c;
    qn.iter().map(|&i| PI * f64::from(i) / eff).collect()
}

/// Damped Newton iteration from `guess`; `Err` carries the last residual.
fn newton(
    qn: &[u32],
    length: f64,
    c: f64,
    tol: f64,
    mut k: Vec<f64>,
) -> std::result::Result<(Vec<f64>, f64), (usize, f64)> {
    let n = k.len();
    let mut f = vec![0.0; n];
    let mut trial_f = vec![0.0; n];
    residual_into(&k, qn, length, c, &mut f);
    let mut norm = max_abs(&f);
    for iter in 0..MAX_NEWTON_ITERATIONS {
        if norm <= tol {
            return Ok((k, norm));
        }
        let jac = jacobian(&k, length, c);
        let rhs = DVector::from_iterator(n, f.iter().map(|x| -x));
        let Some(step) = jac.lu().solve(&rhs) else {
            return Err((iter, norm));
        };
        let mut damping = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_LINE_SEARCH_HALVINGS {
            let trial: Vec<f64> = k
                .iter()
                .zip(step.iter())
                .map(|(ki, si)| ki + damping * si)
                .collect();
            if is_ordered_positive(&trial) {
                residual_into(&trial, qn, length, c, &mut trial_f);
                let trial_norm = max_abs(&trial_f);
                if trial_norm < norm || (trial_norm <= tol) {
                    k = trial;
                    std::mem::swap(&mut f, &mut trial_f);
                    norm = trial_norm;
                    accepted = true;
                    break;
                }
            }
            damping *= 0.5;
        }
        if !accepted {
            // Stalled at rounding level.
            return if norm <= tol { Ok((k, norm)) } else { Err((iter, norm)) };
        }
    }
    if norm <= tol {
        Ok((k, norm))
    } else {
        Err((MAX_NEWTON_ITERATIONS, norm))
    }
}

fn failure(qn: &QuantumNumbers, c: f64, iterations: usize, residual: f64) -> Error {
    Error::SolverFailure {
        solver: "bethe newton",
        iterations,
        residual,
        context: format!(" for quantum numbers {{{qn}}} at c = {c}"),
    }
}

/// Solves the Bethe equations for one set of quantum numbers.
///
/// Below `c = N/L` the solution is continued in `c` from `10 N/L` in geometric
/// steps. `c = 0` is rejected (roots coalesce); `c = inf` returns `k_i = pi I_i / L`.
pub fn solve_bethe_roots(qn: &QuantumNumbers, spec: &GasSpec, tol: f64) -> Result<BetheState> {
    solve_with_guess(qn, spec, tol, None)
}

pub(crate) fn solve_with_guess(
    qn: &QuantumNumbers,
    spec: &GasSpec,
    tol: f64,
    guess: Option<Vec<f64>>,
) -> Result<BetheState> {
    if qn.len() != spec.particle_count {
        return Err(Error::invalid(format!(
            "{} quantum numbers given for {} particles",
            qn.len(),
            spec.particle_count
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("root tolerance must be positive"));
    }
    let c = spec.coupling;
    let length = spec.box_length;
    if c == 0.0 {
        return Err(Error::UnsupportedLimit(
            "c = 0: Bethe roots coalesce; use the free-boson spectrum k_i = pi (I_i - i + 1) / L"
                .into(),
        ));
    }
    if c.is_infinite() {
        let roots: Vec<f64> = qn.values().iter().map(|&i| PI * f64::from(i) / length).collect();
        return Ok(BetheState::from_roots(qn.clone(), roots, 0.0));
    }
    if let Some(g) = guess {
        if g.len() == qn.len() && is_ordered_positive(&g) {
            if let Ok((k, res)) = newton(qn.values(), length, c, tol, g) {
                return Ok(BetheState::from_roots(qn.clone(), k, res));
            }
        }
    }

    let n = spec.particle_count as f64;
    let threshold = n / length;
    if c >= threshold {
        return match newton(qn.values(), length, c, tol, asymptotic_guess(qn.values(), length, c)) {
            Ok((k, res)) => Ok(BetheState::from_roots(qn.clone(), k, res)),
            Err((it, res)) => Err(failure(qn, c, it, res)),
        };
    }

    // Continuation downward in c.
    let mut current = 10.0 * threshold;
    let mut k = asymptotic_guess(qn.values(), length, current);
    loop {
        let loose = tol.max(1e-9);
        let target_tol = if current == c { tol } else { loose };
        match newton(qn.values(), length, current, target_tol, k.clone()) {
            Ok((sol, res)) => {
                if current == c {
                    return Ok(BetheState::from_roots(qn.clone(), sol, res));
                }
                k = sol;
            }
            Err((it, res)) => return Err(failure(qn, current, it, res)),
        }
        current = (current * CONTINUATION_FACTOR).max(c);
    }
}

/// Generalised exclusion statistics factor `1 - 4(N-1)/(cL) + 12 (N-1)^2/(cL)^2`.
///
/// Only meaningful for strong coupling. `N = 1` or `c = inf` gives exactly 1.
pub fn strong_coupling_factor(spec: &GasSpec) -> f64 {
    let m = (spec.particle_count - 1) as f64;
    if m == 0.0 || spec.coupling.is_infinite() {
        return 1.0;
    }
    let x = m / (spec.coupling * spec.box_length);
    1.0 - 4.0 * x + 12.0 * x * x
}

/// Strong-coupling energy `(pi^2 lambda_c / L^2) sum I_i^2`, valid for `c >> pi N / L`.
pub fn strong_coupling_energy(qn: &QuantumNumbers, spec: &GasSpec) -> f64 {
    let l = spec.box_length;
    PI * PI * strong_coupling_factor(spec) / (l * l) * qn.sum_of_squares() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationOptions {
    pub root_tol: f64,
    pub weight_cutoff: f64,
    pub max_states: usize,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self {
            root_tol: DEFAULT_ROOT_TOL,
            weight_cutoff: DEFAULT_WEIGHT_CUTOFF,
            max_states: DEFAULT_MAX_STATES,
        }
    }
}

impl EnumerationOptions {
    fn validate(&self) -> Result<()> {
        if !(self.weight_cutoff > 0.0 && self.weight_cutoff < 1.0) {
            return Err(Error::invalid(format!(
                "weight cutoff must lie in (0, 1), got {}",
                self.weight_cutoff
            )));
        }
        if !(self.root_tol > 0.0) {
            return Err(Error::invalid("root tolerance must be positive"));
        }
        Ok(())
    }
}

/// All states whose Boltzmann weight relative to the ground state exceeds
/// `weight_cutoff`, sorted by energy (ground state first).
pub fn enumerate_states(
    spec: &GasSpec,
    temperature: f64,
    weight_cutoff: f64,
) -> Result<Vec<BetheState>> {
    enumerate_states_with(
        spec,
        temperature,
        &EnumerationOptions {
            weight_cutoff,
            ..Default::default()
        },
    )
}

pub fn enumerate_states_with(
    spec: &GasSpec,
    temperature: f64,
    opts: &EnumerationOptions,
) -> Result<Vec<BetheState>> {
    let mut spectra = enumerate_shared(spec, &[(spec.coupling, temperature)], opts)?;
    Ok(spectra.pop().expect("one condition"))
}

/// Enumerates one quantum-number frontier shared by several `(coupling, temperature)`
/// conditions. A state is kept if its weight exceeds the cutoff under any condition.
/// Returns, per condition, the kept states solved at that coupling, all in the same
/// order (ascending energy at the first condition).
///
/// Raising any quantum number raises every root (the Bethe Jacobian is an M-matrix),
/// so a state below the cutoff has no successor above it and the search prunes there.
/// States are visited best-first by `sum I_i^2`, the strong-coupling energy ordering.
pub fn enumerate_shared(
    template: &GasSpec,
    conditions: &[(f64, f64)],
    opts: &EnumerationOptions,
) -> Result<Vec<Vec<BetheState>>> {
    opts.validate()?;
    if conditions.is_empty() {
        return Err(Error::invalid("at least one (coupling, temperature) condition is required"));
    }
    let specs: Vec<GasSpec> = conditions
        .iter()
        .map(|&(c, t)| {
            if !(t > 0.0) {
                return Err(Error::invalid(format!("temperature must be positive, got {t}")));
            }
            template.with_coupling(c)
        })
        .collect::<Result<_>>()?;

    let n = template.particle_count;
    let ground = QuantumNumbers::ground(n);
    let mut heap: BinaryHeap<Reverse<(u64, QuantumNumbers)>> = BinaryHeap::new();
    let mut seen: HashSet<QuantumNumbers> = HashSet::new();
    // Parent roots for warm starts, one per condition.
    let mut guesses: std::collections::HashMap<QuantumNumbers, Vec<Vec<f64>>> =
        std::collections::HashMap::new();
    heap.push(Reverse((ground.sum_of_squares(), ground.clone())));
    seen.insert(ground);

    let mut ground_energies: Option<Vec<f64>> = None;
    let mut kept: Vec<Vec<BetheState>> = Vec::new();
    let mut visited = 0usize;

    while let Some(Reverse((_, qn))) = heap.pop() {
        visited += 1;
        if visited > opts.max_states {
            return Err(Error::ResourceLimit {
                cap: opts.max_states,
                reached: visited - 1,
            });
        }
        let parent_roots = guesses.remove(&qn);
        let mut solved = Vec::with_capacity(specs.len());
        for (idx, spec) in specs.iter().enumerate() {
            let guess = parent_roots.as_ref().map(|g| g[idx].clone());
            solved.push(solve_with_guess(&qn, spec, opts.root_tol, guess)?);
        }
        let e0 = ground_energies.get_or_insert_with(|| solved.iter().map(|s| s.energy).collect());
        let keep = solved
            .iter()
            .zip(conditions)
            .zip(e0.iter())
            .any(|((s, &(_, t)), &g)| (-(s.energy - g) / t).exp() > opts.weight_cutoff);
        if !keep {
            continue;
        }
        for (moved, next) in qn.successors() {
            if seen.insert(next.clone()) {
                let bumped: Vec<Vec<f64>> = solved
                    .iter()
                    .zip(&specs)
                    .map(|(s, spec)| {
                        let mut k = s.roots.clone();
                        k[moved] += PI / spec.box_length;
                        if moved + 1 < k.len() && k[moved] >= k[moved + 1] {
                            k[moved] = 0.5 * (s.roots[moved] + k[moved + 1]);
                        }
                        k
                    })
                    .collect();
                guesses.insert(next.clone(), bumped);
                heap.push(Reverse((next.sum_of_squares(), next)));
            }
        }
        kept.push(solved);
    }

    // Deterministic order: energy at the first condition, ties broken by quantum numbers.
    kept.sort_by(|a, b| {
        a[0].energy
            .total_cmp(&b[0].energy)
            .then_with(|| a[0].quantum_numbers.cmp(&b[0].quantum_numbers))
    });
    let mut per_condition: Vec<Vec<BetheState>> = vec![Vec::with_capacity(kept.len()); specs.len()];
    for row in kept {
        for (slot, state) in per_condition.iter_mut().zip(row) {
            slot.push(state);
        }
    }
    Ok(per_condition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gas(n: usize, l: f64, c: f64) -> GasSpec {
        GasSpec::new(n, l, c).unwrap()
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(GasSpec::new(0, 1.0, 1.0).is_err());
        assert!(GasSpec::new(2, 0.0, 1.0).is_err());
        assert!(GasSpec::new(2, 1.0, -1.0).is_err());
        assert!(QuantumNumbers::new(vec![1, 1]).is_err());
        assert!(QuantumNumbers::new(vec![0, 1]).is_err());
        assert!(QuantumNumbers::new(vec![2, 1]).is_err());
    }

    #[test]
    fn single_particle_is_free() {
        for c in [0.3, 1.0, 50.0] {
            let s = solve_bethe_roots(&QuantumNumbers::ground(1), &gas(1, 1.0, c), 1e-12).unwrap();
            assert_relative_eq!(s.roots[0], PI, max_relative = 1e-14);
            assert_relative_eq!(s.energy, PI * PI, max_relative = 1e-14);
        }
    }

    #[test]
    fn tonks_girardeau_limit() {
        let s = solve_bethe_roots(&QuantumNumbers::ground(2), &gas(2, 1.0, 1e6), 1e-12).unwrap();
        assert_relative_eq!(s.energy, 5.0 * PI * PI, max_relative = 1e-5);
        for (k, i) in s.roots.iter().zip([1.0, 2.0]) {
            assert!((k - PI * i).abs() <= 1e-4 * PI * i);
        }
    }

    #[test]
    fn zero_coupling_is_rejected() {
        let err = solve_bethe_roots(&QuantumNumbers::ground(2), &gas(2, 1.0, 0.0), 1e-12);
        assert!(matches!(err, Err(Error::UnsupportedLimit(_))));
    }

    #[test]
    fn weak_coupling_uses_continuation() {
        let qn = QuantumNumbers::new(vec![1, 3, 4]).unwrap();
        let s = solve_bethe_roots(&qn, &gas(3, 1.0, 0.05), 1e-12).unwrap();
        assert!(s.residual <= 1e-12);
        assert!(is_ordered_positive(&s.roots));
        // Free-boson limit bounds the energy from below.
        let free: f64 = [1.0f64, 2.0, 2.0].iter().map(|m| (PI * m).powi(2)).sum();
        assert!(s.energy > free && s.energy < strong_coupling_energy(&qn, &gas(3, 1.0, f64::INFINITY)));
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(strong_coupling_factor(&gas(1, 1.0, 3.0)), 1.0);
        assert_relative_eq!(strong_coupling_factor(&gas(5, 1.0, 200.0)), 0.9248, max_relative = 1e-14);
        assert_relative_eq!(strong_coupling_factor(&gas(5, 1.0, 100.0)), 0.8592, max_relative = 1e-14);
        assert!((strong_coupling_factor(&gas(5, 1.0, 1e12)) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn strong_coupling_energy_examples() {
        assert_relative_eq!(
            strong_coupling_energy(&QuantumNumbers::ground(1), &gas(1, 1.0, 7.0)),
            PI * PI,
            max_relative = 1e-15
        );
        // pi^2 * 0.9248 * 55
        let e = strong_coupling_energy(&QuantumNumbers::ground(5), &gas(5, 1.0, 200.0));
        assert_relative_eq!(e, 502.007_558_257_009_1, max_relative = 1e-13);
        let qn = QuantumNumbers::new(vec![2, 3, 7, 8, 11]).unwrap();
        let (a, b) = (gas(5, 1.0, 200.0), gas(5, 1.0, 100.0));
        assert_relative_eq!(
            strong_coupling_energy(&qn, &a) / strong_coupling_energy(&qn, &b),
            strong_coupling_factor(&a) / strong_coupling_factor(&b),
            max_relative = 1e-14
        );
    }

    #[test]
    fn successors_keep_order() {
        let qn = QuantumNumbers::new(vec![1, 2, 4]).unwrap();
        let next: Vec<Vec<u32>> = qn.successors().map(|(_, q)| q.values().to_vec()).collect();
        assert_eq!(next, vec![vec![1, 3, 4], vec![1, 2, 5]]);
    }

    #[test]
    fn zero_temperature_keeps_ground_state_only() {
        let states = enumerate_states(&gas(4, 1.0, 3.0), 1e-6, 1e-8).unwrap();
        assert_eq!(states.len(), 1);
        assert_eq!(states[0].quantum_numbers, QuantumNumbers::ground(4));
    }

    #[test]
    fn state_cap_is_enforced() {
        let opts = EnumerationOptions {
            max_states: 10,
            ..Default::default()
        };
        let err = enumerate_states_with(&gas(3, 1.0, 10.0), 500.0, &opts).unwrap_err();
        assert_eq!(err, Error::ResourceLimit { cap: 10, reached: 10 });
    }

    #[test]
    fn enumeration_sorted_and_converged() {
        let states = enumerate_states(&gas(3, 1.0, 2.0), 40.0, 1e-8).unwrap();
        assert!(states.len() > 10);
        assert!(states.windows(2).all(|w| w[0].energy <= w[1].energy));
        assert_eq!(states[0].quantum_numbers, QuantumNumbers::ground(3));
        for s in &states {
            assert!(s.residual <= DEFAULT_ROOT_TOL);
            assert_eq!(s.energy, s.roots.iter().map(|k| k * k).sum::<f64>());
        }
    }
}
