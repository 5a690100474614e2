//! Dispatch from a resolved config to the library, producing a serializable report.

use idqhe_core::bethe::{enumerate_states_with, EnumerationOptions, GasSpec};
use idqhe_core::cycle::{density_scan, phase_map, run_tba_cycle, TbaCycleSpec, MATCH_RTOL};
use idqhe_core::gibbs::{
    equilibrium_energy, gibbs_ensemble, run_finite_cycle_with, strong_coupling_efficiency, CycleResult,
    CycleSpec,
};
use idqhe_core::luttinger::{
    anyon_effective_coupling, optimal_xi, optimal_xi_small_kappa, sound_velocity_tba, spinor_effective_coupling,
    tll_efficiency, tll_work, TllParams,
};
use idqhe_core::tba::{
    solve_dressed_energy, specific_heat, specific_heat_at_density, thermo_state, GridConfig,
};
use idqhe_core::{Error, Result};

use crate::config::{Command, RunConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Missing,
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Num)
    }
}

pub type Fields = Vec<(&'static str, Cell)>;

#[derive(Debug)]
pub enum Body {
    Record(Fields),
    Table {
        columns: &'static [&'static str],
        rows: Vec<Vec<Cell>>,
    },
}

#[derive(Debug)]
pub struct Report {
    pub tolerances: Fields,
    pub summary: Fields,
    pub body: Body,
    /// First failed row of a scan; the rest of the table is still written.
    pub deferred: Option<Error>,
}

pub const SPECTRUM_COLUMNS: &[&str] = &["index", "quantum_numbers", "energy", "weight"];
pub const SCAN_COLUMNS: &[&str] = &["n", "eta", "work_per_particle"];
pub const PHASE_MAP_COLUMNS: &[&str] = &["mu", "T", "specific_heat", "density", "entropy_density"];

pub fn execute(cfg: &RunConfig) -> Result<Report> {
    match cfg.command {
        Command::Spectrum => spectrum(cfg),
        Command::FiniteCycle => finite_cycle(cfg),
        Command::Tba => tba(cfg),
        Command::TbaCycle => tba_cycle(cfg),
        Command::DensityScan => scan(cfg),
        Command::PhaseMap => map(cfg),
        Command::Tll => tll(cfg),
        Command::CouplingMap => coupling_map(cfg),
    }
}

fn record(tolerances: Fields, fields: Fields) -> Report {
    Report {
        tolerances,
        summary: Vec::new(),
        body: Body::Record(fields),
        deferred: None,
    }
}

fn enumeration(cfg: &RunConfig) -> EnumerationOptions {
    EnumerationOptions {
        root_tol: cfg.real("root-tol"),
        weight_cutoff: cfg.real("cutoff"),
        max_states: cfg.count("max-states"),
    }
}

fn enumeration_tolerances(opts: &EnumerationOptions) -> Fields {
    vec![
        ("root_tol", Cell::Num(opts.root_tol)),
        ("weight_cutoff", Cell::Num(opts.weight_cutoff)),
        ("max_states", Cell::Int(opts.max_states as u64)),
    ]
}

fn grid_tolerances(grid: &GridConfig) -> Fields {
    vec![
        ("newton_tol", Cell::Num(grid.tolerance)),
        ("newton_max_iterations", Cell::Int(grid.max_iterations as u64)),
        ("density_rtol", Cell::Num(grid.density_rtol)),
        ("tail_exponent", Cell::Num(grid.tail_exponent)),
        ("nodes_per_panel", Cell::Int(grid.nodes_per_panel as u64)),
        ("min_nodes", Cell::Int(grid.min_nodes as u64)),
        ("max_cutoff_extensions", Cell::Int(grid.max_cutoff_extensions as u64)),
    ]
}

fn cycle_tolerances(grid: &GridConfig) -> Fields {
    let mut t = grid_tolerances(grid);
    t.push(("entropy_match_rtol", Cell::Num(MATCH_RTOL)));
    t
}

fn cycle_fields(r: &CycleResult) -> Fields {
    vec![
        ("Q2", Cell::Num(r.q2)),
        ("Q4", Cell::Num(r.q4)),
        ("W", Cell::Num(r.work)),
        ("eta", Cell::Num(r.efficiency)),
        ("T_B", r.t_b.into()),
        ("T_D", r.t_d.into()),
    ]
}

fn spectrum(cfg: &RunConfig) -> Result<Report> {
    let gas = GasSpec::new(cfg.count("particles"), cfg.real("length"), cfg.real("c"))?;
    let t = cfg.real("t");
    let opts = enumeration(cfg);
    let ens = gibbs_ensemble(enumerate_states_with(&gas, t, &opts)?, t)?;
    let ground = ens.states()[0].energy;
    let rows = ens
        .states()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            vec![
                Cell::Int(i as u64),
                Cell::Text(s.quantum_numbers.to_string()),
                Cell::Num(s.energy),
                Cell::Num((-(s.energy - ground) / t).exp()),
            ]
        })
        .collect();
    Ok(Report {
        tolerances: enumeration_tolerances(&opts),
        summary: vec![
            ("states", Cell::Int(ens.states().len() as u64)),
            ("ln_partition_function", Cell::Num(ens.ln_partition_function())),
            ("mean_energy", Cell::Num(equilibrium_energy(&ens))),
        ],
        body: Body::Table {
            columns: SPECTRUM_COLUMNS,
            rows,
        },
        deferred: None,
    })
}

fn finite_cycle(cfg: &RunConfig) -> Result<Report> {
    let (c_a, c_b) = (cfg.real("ca"), cfg.real("cb"));
    let gas = GasSpec::new(cfg.count("particles"), cfg.real("length"), c_a)?;
    let spec = CycleSpec::new(gas, c_a, c_b, cfg.real("ta"), cfg.real("tc"))?;
    let opts = enumeration(cfg);
    let cycle = run_finite_cycle_with(&spec, &opts)?;
    let mut fields = cycle_fields(&cycle.result);
    fields.extend([
        ("eta_strong_coupling", Cell::Num(strong_coupling_efficiency(c_a, c_b, &gas))),
        ("carnot", Cell::Num(1.0 - spec.t_a / spec.t_c)),
        ("states", Cell::Int(cycle.ensemble_a.states().len() as u64)),
    ]);
    Ok(record(enumeration_tolerances(&opts), fields))
}

fn tba(cfg: &RunConfig) -> Result<Report> {
    let grid = GridConfig::default();
    let (c, mu, t) = (cfg.real("c"), cfg.real("mu"), cfg.real("t"));
    let de = solve_dressed_energy(c, mu, t, &grid)?;
    let st = thermo_state(c, mu, t, &grid)?;
    let fields = vec![
        ("pressure", Cell::Num(st.pressure)),
        ("density", Cell::Num(st.density)),
        ("entropy_density", Cell::Num(st.entropy_density)),
        ("energy_density", Cell::Num(st.energy_density)),
        ("kinetic_energy_density", Cell::Num(st.kinetic_energy_density)),
        ("compressibility", Cell::Num(st.compressibility)),
        ("specific_heat_mu", Cell::Num(specific_heat(c, mu, t, &grid)?)),
        ("specific_heat_n", Cell::Num(specific_heat_at_density(c, mu, t, &grid)?)),
        ("momentum_cutoff", Cell::Num(de.cutoff())),
        ("nodes", Cell::Int(de.node_count() as u64)),
        ("newton_iterations", Cell::Int(de.iterations as u64)),
    ];
    Ok(record(grid_tolerances(&grid), fields))
}

fn cycle_spec(cfg: &RunConfig, density: f64) -> Result<TbaCycleSpec> {
    TbaCycleSpec::new(
        cfg.real("ca"),
        cfg.real("cb"),
        cfg.real("ta"),
        cfg.real("tc"),
        density,
        cfg.real("length"),
    )
}

fn tba_cycle(cfg: &RunConfig) -> Result<Report> {
    let grid = GridConfig::default();
    let spec = cycle_spec(cfg, cfg.real("n"))?;
    let cycle = run_tba_cycle(&spec, &grid)?;
    let [a, b, c, d] = &cycle.corners;
    let mut fields = cycle_fields(&cycle.result);
    fields.extend([
        ("work_per_particle", Cell::Num(cycle.result.work / (spec.density * spec.box_length))),
        ("carnot", Cell::Num(1.0 - spec.t_a / spec.t_c)),
        ("mu_A", Cell::Num(a.chemical_potential)),
        ("mu_B", Cell::Num(b.chemical_potential)),
        ("mu_C", Cell::Num(c.chemical_potential)),
        ("mu_D", Cell::Num(d.chemical_potential)),
        ("entropy_density_AB", Cell::Num(a.entropy_density)),
        ("entropy_density_CD", Cell::Num(c.entropy_density)),
    ]);
    Ok(record(cycle_tolerances(&grid), fields))
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| if i + 1 == count { hi } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 })
            .collect(),
    }
}

fn scan(cfg: &RunConfig) -> Result<Report> {
    let grid = GridConfig::default();
    let (lo, hi, points) = (cfg.real("n-min"), cfg.real("n-max"), cfg.count("points"));
    if points == 0 || !(lo <= hi) {
        return Err(Error::InvalidInput(format!(
            "need n-min <= n-max and at least one point, got [{lo}, {hi}] with {points}"
        )));
    }
    let spec = cycle_spec(cfg, lo)?;
    let rows = density_scan(&spec, &linspace(lo, hi, points), &grid)?;

    let mut deferred = None;
    let mut not_engines = 0u64;
    let mut best: Option<(f64, f64)> = None;
    let mut table = Vec::with_capacity(rows.len());
    for row in &rows {
        let wpp = row.work_per_particle(spec.box_length);
        match &row.outcome {
            Err(Error::NotAnEngine { .. }) => not_engines += 1,
            Err(e) if deferred.is_none() => {
                deferred = Some(e.clone().with_context(format!("n = {}", row.density)));
            }
            _ => {}
        }
        if let Some(w) = wpp {
            if best.map_or(true, |(_, bw)| w > bw) {
                best = Some((row.density, w));
            }
        }
        table.push(vec![
            Cell::Num(row.density),
            row.outcome.as_ref().ok().map(|r| r.efficiency).into(),
            wpp.into(),
        ]);
    }
    let missing = rows.iter().filter(|r| r.outcome.is_err()).count() as u64;
    Ok(Report {
        tolerances: cycle_tolerances(&grid),
        summary: vec![
            ("missing_rows", Cell::Int(missing)),
            ("not_an_engine_rows", Cell::Int(not_engines)),
            ("n_at_max_work_per_particle", best.map(|b| b.0).into()),
            ("max_work_per_particle", best.map(|b| b.1).into()),
        ],
        body: Body::Table {
            columns: SCAN_COLUMNS,
            rows: table,
        },
        deferred,
    })
}

fn map(cfg: &RunConfig) -> Result<Report> {
    let grid = GridConfig::default();
    let m = phase_map(
        cfg.real("c"),
        (cfg.real("mu-min"), cfg.real("mu-max")),
        (cfg.real("t-min"), cfg.real("t-max")),
        (cfg.count("mu-points"), cfg.count("t-points")),
        &grid,
    )?;
    let n_mu = m.mu_values.len();
    let mut deferred = None;
    let rows = m
        .cells
        .iter()
        .enumerate()
        .map(|(idx, cell)| {
            let (mu, t) = (m.mu_values[idx % n_mu], m.temperature_values[idx / n_mu]);
            match cell {
                Ok(p) => vec![
                    Cell::Num(mu),
                    Cell::Num(t),
                    Cell::Num(p.specific_heat),
                    Cell::Num(p.density),
                    Cell::Num(p.entropy_density),
                ],
                Err(e) => {
                    if deferred.is_none() {
                        deferred = Some(e.clone().with_context(format!("mu = {mu}, T = {t}")));
                    }
                    vec![Cell::Num(mu), Cell::Num(t), Cell::Missing, Cell::Missing, Cell::Missing]
                }
            }
        })
        .collect();
    let missing = m.cells.iter().filter(|c| c.is_err()).count() as u64;
    Ok(Report {
        tolerances: grid_tolerances(&grid),
        summary: vec![("missing_rows", Cell::Int(missing))],
        body: Body::Table {
            columns: PHASE_MAP_COLUMNS,
            rows,
        },
        deferred,
    })
}

fn tll(cfg: &RunConfig) -> Result<Report> {
    let grid = GridConfig::default();
    let kappa = cfg.real("kappa");
    let mut fields = vec![
        ("xi_c", Cell::Num(optimal_xi(kappa)?)),
        ("xi_c_small_kappa", Cell::Num(optimal_xi_small_kappa(kappa)?)),
    ];
    let mut tolerances = Vec::new();
    match (cfg.opt_real("ca"), cfg.opt_real("cb")) {
        (Some(c_a), Some(c_b)) => {
            let n = cfg.real("n");
            let (t_c, length) = (cfg.real("tc"), cfg.real("length"));
            let v_a = sound_velocity_tba(n, c_a, &grid)?;
            let v_b = sound_velocity_tba(n, c_b, &grid)?;
            let params = TllParams::new(v_a, v_b, kappa)?;
            let xi_c = optimal_xi(kappa)?;
            fields.extend([
                ("v_A", Cell::Num(v_a)),
                ("v_B", Cell::Num(v_b)),
                ("xi", Cell::Num(params.xi)),
                ("eta", Cell::Num(tll_efficiency(&params))),
                ("W", Cell::Num(tll_work(v_b, t_c, kappa, params.xi, length)?)),
                ("W_at_xi_c", Cell::Num(tll_work(v_b, t_c, kappa, xi_c, length)?)),
                ("T_A", Cell::Num(kappa * t_c)),
                ("engine", Cell::Bool(params.is_engine())),
            ]);
            tolerances = grid_tolerances(&grid);
        }
        (None, None) => {}
        _ => return Err(Error::InvalidInput("--ca and --cb must be given together".into())),
    }
    Ok(record(tolerances, fields))
}

fn coupling_map(cfg: &RunConfig) -> Result<Report> {
    let kind = cfg.choice("kind");
    let (needed, foreign): (&[&str], &[&str]) = match kind {
        "anyon" => (&["c-tilde", "theta"], &["c-o", "c-e", "spin-corr"]),
        _ => (&["c-o", "c-e", "spin-corr"], &["c-tilde", "theta"]),
    };
    if let Some(k) = needed.iter().find(|k| cfg.opt_real(k).is_none()) {
        return Err(Error::InvalidInput(format!("{kind} mapping needs --{k}")));
    }
    if let Some(k) = foreign.iter().find(|k| cfg.opt_real(k).is_some()) {
        return Err(Error::InvalidInput(format!("--{k} does not apply to the {kind} mapping")));
    }
    let c_eff = match kind {
        "anyon" => anyon_effective_coupling(cfg.real("c-tilde"), cfg.real("theta"))?,
        _ => spinor_effective_coupling(cfg.real("c-o"), cfg.real("c-e"), cfg.real("spin-corr"))?,
    };
    Ok(record(Vec::new(), vec![("c_eff", Cell::Num(c_eff))]))
}
