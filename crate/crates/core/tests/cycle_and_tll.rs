use idqhe_core::cycle::{
    cycle_trajectory, match_entropy_temperature, phase_map, run_tba_cycle, specific_heat_ridges,
    TbaCycleSpec, MATCH_RTOL,
};
use idqhe_core::luttinger::{sound_velocity_strong, sound_velocity_tba, sound_velocity_weak};
use idqhe_core::tba::{invert_density, GridConfig};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn isentrope_follows_sound_velocity_ratio() {
    let cfg = GridConfig::default();
    let a = invert_density(1.0, 1.0, 0.05, &cfg, None).unwrap();
    let t_b = match_entropy_temperature(2.0, a.entropy_density, 1.0, (0.05 / 3.0, 0.15), &cfg).unwrap();
    let ratio = sound_velocity_tba(1.0, 2.0, &cfg).unwrap() / sound_velocity_tba(1.0, 1.0, &cfg).unwrap();
    assert!(rel(t_b, 0.05 * ratio) <= 0.01, "{t_b} vs {}", 0.05 * ratio);
    let b = invert_density(2.0, 1.0, t_b, &cfg, None).unwrap();
    assert!(rel(b.entropy_density, a.entropy_density) <= MATCH_RTOL);
}

#[test]
fn efficiency_approaches_luttinger_value_as_temperature_drops() {
    let cfg = GridConfig::default();
    let (c_a, c_b) = (0.8, 2.0);
    let xi = sound_velocity_tba(1.0, c_a, &cfg).unwrap() / sound_velocity_tba(1.0, c_b, &cfg).unwrap();
    let gaps: Vec<f64> = [0.4, 0.2, 0.1, 0.05]
        .iter()
        .map(|&t_c| {
            let spec = TbaCycleSpec::new(c_a, c_b, 0.5 * t_c, t_c, 1.0, 1.0).unwrap();
            let eta = run_tba_cycle(&spec, &cfg).unwrap().result.efficiency;
            (eta - (1.0 - xi)).abs()
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps[2] <= 0.02 * (1.0 - xi));
}

#[test]
fn sound_velocity_matches_expansions() {
    let cfg = GridConfig::default();
    let strong = sound_velocity_tba(1.0, 200.0, &cfg).unwrap();
    assert!(rel(strong, sound_velocity_strong(1.0, 200.0)) <= 1e-3);
    let weak = sound_velocity_tba(1.0, 0.05, &cfg).unwrap();
    assert!(rel(weak, sound_velocity_weak(1.0, 0.05).unwrap()) <= 1e-2);
    let v: Vec<f64> = [0.3, 1.0, 3.0, 10.0, 50.0]
        .iter()
        .map(|&c| sound_velocity_tba(1.0, c, &cfg).unwrap())
        .collect();
    assert!(v.windows(2).all(|w| w[1] > w[0]));
    // Between the two expansions in the crossover.
    let mid = sound_velocity_tba(1.0, 5.0, &cfg).unwrap();
    assert!(mid > sound_velocity_weak(1.0, 5.0).unwrap() && mid < sound_velocity_strong(1.0, 5.0) * 1.05);
}

#[test]
fn degenerate_cycle_keeps_chemical_potential_trace() {
    let cfg = GridConfig::default();
    let spec = TbaCycleSpec::new(2.0, 2.0, 0.5, 1.5, 1.0, 1.0).unwrap();
    let corners = cycle_trajectory(&spec, &cfg).unwrap();
    assert_eq!(corners[0], corners[1]);
    assert_eq!(corners[2], corners[3]);
    assert!(corners[0].1 < corners[2].1);
}

#[test]
fn cycle_near_peak_work_straddles_quantum_critical_fan() {
    let cfg = GridConfig::default();
    let spec = TbaCycleSpec::new(1.0, 3.0, 1.0, 5.0, 1.4, 1.0).unwrap();
    let cycle = run_tba_cycle(&spec, &cfg).unwrap();
    let couplings = [spec.c_a, spec.c_b, spec.c_b, spec.c_a];
    let mut regions = Vec::new();
    for (st, c) in cycle.corners.iter().zip(couplings) {
        let t = st.temperature;
        let ridges = specific_heat_ridges(c, t, (-6.0 * t, 6.0 * t), 41, &cfg).unwrap();
        let upper = ridges.last().unwrap().0;
        regions.push(st.chemical_potential > upper);
    }
    // Some corners lie on the Luttinger-liquid side of the crossover and some inside the fan.
    assert!(regions.iter().any(|&r| r) && regions.iter().any(|&r| !r), "{regions:?}");
}

#[test]
fn phase_map_layout_and_determinism() {
    let cfg = GridConfig::default();
    let a = phase_map(1.0, (-3.0, 3.0), (0.5, 1.5), (4, 3), &cfg).unwrap();
    let b = phase_map(1.0, (-3.0, 3.0), (0.5, 1.5), (4, 3), &cfg).unwrap();
    assert_eq!(a.cells.len(), 12);
    for (i, t) in a.temperature_values.iter().enumerate() {
        for (j, mu) in a.mu_values.iter().enumerate() {
            let p = a.cell(i, j).as_ref().unwrap();
            assert_eq!((p.chemical_potential, p.temperature), (*mu, *t));
            assert!(p.specific_heat > 0.0);
        }
    }
    for (x, y) in a.cells.iter().zip(&b.cells) {
        assert_eq!(x.as_ref().unwrap(), y.as_ref().unwrap());
    }
    assert!(phase_map(1.0, (-3.0, 3.0), (0.0, 1.0), (2, 2), &cfg).is_err());
}

#[test]
fn phase_map_classical_corner() {
    let cfg = GridConfig::default();
    let map = phase_map(1.0, (-10.0, -10.0), (1.0, 1.0), (1, 1), &cfg).unwrap();
    let p = map.cells[0].as_ref().unwrap();
    // Fixed-mu heat capacity of the ideal classical gas: 3/4 - mu/T + (mu/T)^2 per particle.
    assert!(rel(p.specific_heat / p.density, 110.75) <= 0.01);
}
