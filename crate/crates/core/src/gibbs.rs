//! Canonical ensembles over Bethe eigenstates and the four-stroke cycle at finite N.

use rayon::prelude::*;

use crate::bethe::{
    enumerate_shared, solve_with_guess, strong_coupling_factor, BetheState, EnumerationOptions,
    GasSpec,
};
use crate::error::{Error, Result};

/// Couplings with `c L >= STRONG_COUPLING_RATIO * N` count as strongly interacting
/// when reporting effective temperatures.
pub const STRONG_COUPLING_RATIO: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsEnsemble {
    states: Vec<BetheState>,
    temperature: f64,
    probabilities: Vec<f64>,
    /// `sum_n exp(-(e_n - e_0)/T)`.
    reduced_partition_function: f64,
    ground_energy: f64,
}

impl GibbsEnsemble {
    pub fn states(&self) -> &[BetheState] {
        &self.states
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Partition function with the lowest retained energy set to zero.
    pub fn reduced_partition_function(&self) -> f64 {
        self.reduced_partition_function
    }

    pub fn ln_partition_function(&self) -> f64 {
        self.reduced_partition_function.ln() - self.ground_energy / self.temperature
    }

    /// `Z = sum_n exp(-e_n / T)`; may under- or overflow, prefer the log form.
    pub fn partition_function(&self) -> f64 {
        self.ln_partition_function().exp()
    }

    /// Index of the most probable state.
    pub fn most_probable(&self) -> usize {
        self.probabilities
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best })
            .0
    }
}

/// Boltzmann weights `p_n = exp(-e_n/T) / Z`, computed relative to the lowest energy.
pub fn gibbs_ensemble(states: Vec<BetheState>, temperature: f64) -> Result<GibbsEnsemble> {
    if states.is_empty() {
        return Err(Error::invalid("cannot build an ensemble from an empty state list"));
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::invalid(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    if states.iter().any(|s| !s.energy.is_finite()) {
        return Err(Error::invalid("state energies must be finite"));
    }
    let ground_energy = states.iter().map(|s| s.energy).fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = states
        .iter()
        .map(|s| (-(s.energy - ground_energy) / temperature).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let probabilities = weights.into_iter().map(|w| w / z).collect();
    Ok(GibbsEnsemble {
        states,
        temperature,
        probabilities,
        reduced_partition_function: z,
        ground_energy,
    })
}

/// `sum_n p_n e_n`.
pub fn equilibrium_energy(ens: &GibbsEnsemble) -> f64 {
    ens.probabilities
        .iter()
        .zip(&ens.states)
        .map(|(p, s)| p * s.energy)
        .sum()
}

/// Energy after a slow ramp of the coupling to `target_coupling`: each retained
/// quantum-number set is re-solved at the new coupling while the populations stay fixed.
pub fn adiabatic_energy(ens: &GibbsEnsemble, target_coupling: f64, spec: &GasSpec) -> Result<f64> {
    if !(target_coupling > 0.0) {
        return Err(Error::invalid(format!(
            "target coupling must be positive, got {target_coupling}"
        )));
    }
    let target = spec.with_coupling(target_coupling)?;
    let energies: Vec<f64> = ens
        .states
        .par_iter()
        .map(|s| {
            solve_with_guess(
                &s.quantum_numbers,
                &target,
                crate::bethe::DEFAULT_ROOT_TOL,
                Some(s.roots.clone()),
            )
            .map(|r| r.energy)
        })
        .collect::<Result<_>>()?;
    Ok(ens
        .probabilities
        .iter()
        .zip(&energies)
        .map(|(p, e)| p * e)
        .sum())
}

/// `T' = lambda_{c'} T / lambda_c`: temperature of the equilibrium state a strongly
/// interacting gas appears to reach after ramping `c -> c'`.
pub fn effective_temperature(c: f64, c_prime: f64, temperature: f64, spec: &GasSpec) -> f64 {
    temperature * (lambda_at(spec, c_prime) / lambda_at(spec, c))
}

/// `1 - lambda_{c_A} / lambda_{c_B}`.
pub fn strong_coupling_efficiency(c_a: f64, c_b: f64, spec: &GasSpec) -> f64 {
    1.0 - lambda_at(spec, c_a) / lambda_at(spec, c_b)
}

fn lambda_at(spec: &GasSpec, coupling: f64) -> f64 {
    spec.with_coupling(coupling)
        .map(|g| strong_coupling_factor(&g))
        .unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleSpec {
    /// Particle number and box length; the coupling field is ignored.
    pub gas: GasSpec,
    pub c_a: f64,
    pub c_b: f64,
    pub t_a: f64,
    pub t_c: f64,
}

impl CycleSpec {
    pub fn new(gas: GasSpec, c_a: f64, c_b: f64, t_a: f64, t_c: f64) -> Result<Self> {
        if !(c_a > 0.0 && c_b > 0.0) {
            return Err(Error::invalid("couplings must be positive"));
        }
        if c_a > c_b {
            return Err(Error::invalid(format!(
                "the cycle ramps the coupling up: need c_A <= c_B, got {c_a} > {c_b}"
            )));
        }
        if !(t_a > 0.0 && t_a < t_c) {
            return Err(Error::invalid(format!(
                "need 0 < T_A < T_C, got T_A = {t_a}, T_C = {t_c}"
            )));
        }
        Ok(Self { gas, c_a, c_b, t_a, t_c })
    }
}

/// Heats, work and efficiency of one cycle. `t_b`/`t_d` are `None` when no
/// temperature can be assigned to the post-ramp states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleResult {
    pub q2: f64,
    pub q4: f64,
    pub work: f64,
    pub efficiency: f64,
    pub t_b: Option<f64>,
    pub t_d: Option<f64>,
}

impl CycleResult {
    pub(crate) fn assemble(q2: f64, q4: f64, t_b: Option<f64>, t_d: Option<f64>) -> Result<Self> {
        if !(q2 > 0.0) {
            return Err(Error::NotAnEngine { q2 });
        }
        let work = q2 - q4;
        let efficiency = if work == 0.0 { 0.0 } else { work / q2 };
        Ok(Self {
            q2,
            q4,
            work,
            efficiency,
            t_b,
            t_d,
        })
    }
}

/// Energies at the four corners of a finite-N cycle, with the ensembles they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteCycle {
    pub result: CycleResult,
    /// Thermal state A at `(c_A, T_A)`.
    pub ensemble_a: GibbsEnsemble,
    /// Thermal state C at `(c_B, T_C)`.
    pub ensemble_c: GibbsEnsemble,
}

pub fn run_finite_cycle(spec: &CycleSpec, cutoff: f64) -> Result<CycleResult> {
    run_finite_cycle_with(
        spec,
        &EnumerationOptions {
            weight_cutoff: cutoff,
            ..Default::default()
        },
    )
    .map(|c| c.result)
}

/// Both thermal states share one quantum-number frontier so the ramps map states
/// one to one; populations are carried unchanged through each ramp.
pub fn run_finite_cycle_with(spec: &CycleSpec, opts: &EnumerationOptions) -> Result<FiniteCycle> {
    let conditions = [(spec.c_a, spec.t_a), (spec.c_b, spec.t_c)];
    let mut spectra = enumerate_shared(&spec.gas, &conditions, opts)?;
    let at_cb = spectra.pop().expect("two conditions");
    let at_ca = spectra.pop().expect("two conditions");

    let ensemble_a = gibbs_ensemble(at_ca, spec.t_a)?;
    let ensemble_c = gibbs_ensemble(at_cb, spec.t_c)?;
    let mix = |p: &[f64], states: &[BetheState]| -> f64 {
        p.iter().zip(states).map(|(p, s)| p * s.energy).sum()
    };
    let eq_c = mix(ensemble_c.probabilities(), ensemble_c.states());
    let neq_b = mix(ensemble_a.probabilities(), ensemble_c.states());
    let neq_d = mix(ensemble_c.probabilities(), ensemble_a.states());
    let eq_a = mix(ensemble_a.probabilities(), ensemble_a.states());
    let q2 = eq_c - neq_b;
    let q4 = neq_d - eq_a;

    let strong = spec.c_a.min(spec.c_b) * spec.gas.box_length()
        >= STRONG_COUPLING_RATIO * spec.gas.particle_count() as f64;
    let (t_b, t_d) = if strong {
        (
            Some(effective_temperature(spec.c_a, spec.c_b, spec.t_a, &spec.gas)),
            Some(effective_temperature(spec.c_b, spec.c_a, spec.t_c, &spec.gas)),
        )
    } else {
        (None, None)
    };
    let result = CycleResult::assemble(q2, q4, t_b, t_d)?;
    Ok(FiniteCycle {
        result,
        ensemble_a,
        ensemble_c,
    })
}
