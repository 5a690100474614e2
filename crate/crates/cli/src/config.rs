//! Command table, flag/file merging and parameter resolution.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{value_parser, Arg, ArgMatches};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    FiniteCycle,
    Tba,
    TbaCycle,
    DensityScan,
    PhaseMap,
    Tll,
    CouplingMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Real,
    Count,
    Choice(&'static [&'static str]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Default {
    Required,
    Absent,
    Value(&'static str),
}

#[derive(Debug, Clone, Copy)]
pub struct Param {
    pub key: &'static str,
    pub kind: Kind,
    pub default: Default,
    pub help: &'static str,
}

const fn req(key: &'static str, help: &'static str) -> Param {
    Param { key, kind: Kind::Real, default: Default::Required, help }
}

const fn real(key: &'static str, default: &'static str, help: &'static str) -> Param {
    Param { key, kind: Kind::Real, default: Default::Value(default), help }
}

const fn maybe(key: &'static str, help: &'static str) -> Param {
    Param { key, kind: Kind::Real, default: Default::Absent, help }
}

const fn count(key: &'static str, default: Default, help: &'static str) -> Param {
    Param { key, kind: Kind::Count, default, help }
}

const PARTICLES: Param = count("particles", Default::Required, "particle number N");
const LENGTH: Param = real("length", "1", "box length L");
const CUTOFF: Param = real("cutoff", "1e-8", "drop states with Boltzmann weight below this, relative to the ground state");
const MAX_STATES: Param = count("max-states", Default::Value("1000000"), "abort enumeration beyond this many states");
const ROOT_TOL: Param = real("root-tol", "1e-12", "max-norm tolerance on the Bethe equations");
const CA: Param = req("ca", "coupling c_A on the cold side");
const CB: Param = req("cb", "coupling c_B on the hot side");
const TA: Param = req("ta", "cold bath temperature T_A");
const TC: Param = req("tc", "hot bath temperature T_C");

const SPECTRUM: &[Param] = &[
    PARTICLES,
    LENGTH,
    req("c", "coupling"),
    req("t", "temperature"),
    CUTOFF,
    MAX_STATES,
    ROOT_TOL,
];
const FINITE_CYCLE: &[Param] = &[PARTICLES, LENGTH, CA, CB, TA, TC, CUTOFF, MAX_STATES, ROOT_TOL];
const TBA: &[Param] = &[req("c", "coupling"), req("mu", "chemical potential"), req("t", "temperature")];
const TBA_CYCLE: &[Param] = &[CA, CB, TA, TC, req("n", "density, held fixed around the cycle"), LENGTH];
const DENSITY_SCAN: &[Param] = &[
    CA,
    CB,
    TA,
    TC,
    LENGTH,
    real("n-min", "0.1", "lowest density"),
    real("n-max", "23", "highest density"),
    count("points", Default::Value("24"), "evenly spaced densities"),
];
const PHASE_MAP: &[Param] = &[
    req("c", "coupling"),
    req("mu-min", "lowest chemical potential"),
    req("mu-max", "highest chemical potential"),
    count("mu-points", Default::Value("41"), "grid points along mu"),
    req("t-min", "lowest temperature"),
    req("t-max", "highest temperature"),
    count("t-points", Default::Value("21"), "grid points along T"),
];
const TLL: &[Param] = &[
    req("kappa", "temperature ratio T_A / T_C"),
    maybe("ca", "cold-side coupling; with --cb, evaluates the cycle from TBA sound velocities"),
    maybe("cb", "hot-side coupling"),
    real("n", "1", "density for the sound velocities"),
    real("tc", "1", "hot bath temperature for the work"),
    LENGTH,
];
const COUPLING_MAP: &[Param] = &[
    Param {
        key: "kind",
        kind: Kind::Choice(&["anyon", "spinor"]),
        default: Default::Required,
        help: "which mapping to evaluate",
    },
    maybe("c-tilde", "anyon coupling"),
    maybe("theta", "statistical angle in [0, pi)"),
    maybe("c-o", "odd-channel coupling"),
    maybe("c-e", "even-channel coupling"),
    maybe("spin-corr", "nearest-neighbour spin correlator in [-3/4, 1/4]"),
];

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Spectrum,
        Command::FiniteCycle,
        Command::Tba,
        Command::TbaCycle,
        Command::DensityScan,
        Command::PhaseMap,
        Command::Tll,
        Command::CouplingMap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::FiniteCycle => "finite-cycle",
            Command::Tba => "tba",
            Command::TbaCycle => "tba-cycle",
            Command::DensityScan => "density-scan",
            Command::PhaseMap => "phase-map",
            Command::Tll => "tll",
            Command::CouplingMap => "coupling-map",
        }
    }

    fn about(self) -> &'static str {
        match self {
            Command::Spectrum => "Bethe states of N bosons in a hard-wall box with their Boltzmann weights",
            Command::FiniteCycle => "Interaction-driven cycle from the exact finite-N spectrum",
            Command::Tba => "Yang-Yang thermodynamics at one (c, mu, T)",
            Command::TbaCycle => "Interaction-driven cycle in the thermodynamic limit at fixed density",
            Command::DensityScan => "Efficiency and work per particle across densities",
            Command::PhaseMap => "Specific heat, density and entropy on a (mu, T) grid",
            Command::Tll => "Luttinger-liquid efficiency, work and optimal velocity ratio",
            Command::CouplingMap => "Effective bosonic coupling for anyons or spin-1/2 bosons",
        }
    }

    pub fn params(self) -> &'static [Param] {
        match self {
            Command::Spectrum => SPECTRUM,
            Command::FiniteCycle => FINITE_CYCLE,
            Command::Tba => TBA,
            Command::TbaCycle => TBA_CYCLE,
            Command::DensityScan => DENSITY_SCAN,
            Command::PhaseMap => PHASE_MAP,
            Command::Tll => TLL,
            Command::CouplingMap => COUPLING_MAP,
        }
    }

    pub fn tabular(self) -> bool {
        matches!(self, Command::Spectrum | Command::DensityScan | Command::PhaseMap)
    }

    fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Real(f64),
    Count(usize),
    Choice(&'static str),
}

impl Value {
    /// Text that parses back to the same value.
    pub fn render(&self) -> String {
        match self {
            Value::Real(x) => serde_json::Number::from_f64(*x)
                .map(|n| n.to_string())
                .unwrap_or_else(|| x.to_string()),
            Value::Count(k) => k.to_string(),
            Value::Choice(s) => s.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Resolved parameters in table order; absent optionals are left out.
    pub params: Vec<(&'static str, Value)>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
}

impl RunConfig {
    fn get(&self, key: &str) -> Option<&Value> {
        self.params.iter().find(|(k, _)| *k == key).map(|(_, v)| v)
    }

    pub fn opt_real(&self, key: &str) -> Option<f64> {
        match self.get(key) {
            Some(Value::Real(x)) => Some(*x),
            _ => None,
        }
    }

    pub fn real(&self, key: &str) -> f64 {
        self.opt_real(key)
            .unwrap_or_else(|| panic!("parameter {key} not resolved"))
    }

    pub fn count(&self, key: &str) -> usize {
        match self.get(key) {
            Some(Value::Count(k)) => *k,
            _ => panic!("parameter {key} not resolved"),
        }
    }

    pub fn choice(&self, key: &str) -> &'static str {
        match self.get(key) {
            Some(Value::Choice(s)) => s,
            _ => panic!("parameter {key} not resolved"),
        }
    }
}

#[derive(Debug)]
pub enum ParseError {
    /// Help, version and flag-level errors; clap prints and picks the exit code.
    Clap(clap::Error),
    Usage(String),
    Io(PathBuf, std::io::Error),
}

pub fn cli() -> clap::Command {
    let mut root = clap::Command::new("idqhe")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Interaction-driven quantum heat engine with a Lieb-Liniger working medium")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .global(true)
                .value_parser(value_parser!(PathBuf))
                .help("key = value file; flags override its entries"),
        )
        .arg(
            Arg::new("output")
                .long("output")
                .short('o')
                .value_name("FILE")
                .global(true)
                .value_parser(value_parser!(PathBuf))
                .help("write here instead of stdout"),
        )
        .arg(
            Arg::new("format")
                .long("format")
                .global(true)
                .value_parser(["json", "csv"])
                .help("default: json for single results, csv for tables"),
        )
        .arg(
            Arg::new("threads")
                .long("threads")
                .global(true)
                .value_parser(value_parser!(u32).range(1..))
                .help("worker threads for scans [env: IDQHE_THREADS]"),
        )
        .after_help(
            "Units: hbar = 2m = kB = 1.\n\
             Exit codes: 0 ok, 2 usage, 3 solver failure, 4 not an engine, 5 I/O.",
        );
    for cmd in Command::ALL {
        let mut sub = clap::Command::new(cmd.name())
            .about(cmd.about())
            .allow_negative_numbers(true);
        for p in cmd.params() {
            let help = match (p.default, p.kind) {
                (Default::Value(d), _) => format!("{} [default: {d}]", p.help),
                (_, Kind::Choice(opts)) => format!("{} [{}]", p.help, opts.join(", ")),
                _ => p.help.to_string(),
            };
            let value_name = match p.kind {
                Kind::Count => "INT",
                Kind::Choice(_) => "NAME",
                Kind::Real => "X",
            };
            sub = sub.arg(Arg::new(p.key).long(p.key).value_name(value_name).help(help));
        }
        root = root.subcommand(sub);
    }
    root
}

pub fn parse_args<I, T>(args: I, env_threads: Option<&str>) -> Result<RunConfig, ParseError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = cli().try_get_matches_from(args).map_err(ParseError::Clap)?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let command = Command::from_name(name).expect("registered subcommand");

    let file = match sub.get_one::<PathBuf>("config") {
        Some(path) => read_config_file(path)?,
        None => Vec::new(),
    };
    let flag = |key: &str| sub.get_one::<String>(key).cloned();
    let params = resolve(command, flag, &file).map_err(ParseError::Usage)?;

    let format = match sub.get_one::<String>("format").map(String::as_str) {
        Some("csv") => Format::Csv,
        Some(_) => Format::Json,
        None if command.tabular() => Format::Csv,
        None => Format::Json,
    };
    Ok(RunConfig {
        command,
        params,
        output: sub.get_one::<PathBuf>("output").cloned(),
        format,
        threads: threads(sub, env_threads)?,
    })
}

fn threads(sub: &ArgMatches, env: Option<&str>) -> Result<Option<usize>, ParseError> {
    if let Some(&k) = sub.get_one::<u32>("threads") {
        return Ok(Some(k as usize));
    }
    match env.map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) => match s.parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(ParseError::Usage(format!(
                "IDQHE_THREADS must be a positive integer, got `{s}`"
            ))),
        },
    }
}

fn read_config_file(path: &Path) -> Result<Vec<(String, String)>, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|e| ParseError::Io(path.to_path_buf(), e))?;
    parse_config_text(&text).map_err(|e| ParseError::Usage(format!("{}: {e}", path.display())))
}

/// `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("line {}: expected `key = value`", i + 1));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(format!("line {}: empty key or value", i + 1));
        }
        if out.iter().any(|(k, _)| k == key) {
            return Err(format!("line {}: `{key}` given twice", i + 1));
        }
        out.push((key.to_string(), value.to_string()));
    }
    Ok(out)
}

/// Flag, then file, then default.
pub fn resolve(
    command: Command,
    flag: impl Fn(&str) -> Option<String>,
    file: &[(String, String)],
) -> Result<Vec<(&'static str, Value)>, String> {
    let table = command.params();
    if let Some((key, _)) = file.iter().find(|(k, _)| !table.iter().any(|p| p.key == k.as_str())) {
        return Err(format!("unknown parameter `{key}` for {}", command.name()));
    }
    let mut params = Vec::with_capacity(table.len());
    for p in table {
        let from_file = file.iter().find(|(k, _)| k == p.key).map(|(_, v)| v.clone());
        let raw = match (flag(p.key).or(from_file), p.default) {
            (Some(v), _) => v,
            (None, Default::Value(d)) => d.to_string(),
            (None, Default::Absent) => continue,
            (None, Default::Required) => {
                return Err(format!(
                    "missing required parameter --{} for {}",
                    p.key,
                    command.name()
                ))
            }
        };
        params.push((p.key, parse_value(p, &raw)?));
    }
    Ok(params)
}

fn parse_value(p: &Param, raw: &str) -> Result<Value, String> {
    let bad = |what: &str| format!("--{} expects {what}, got `{raw}`", p.key);
    match p.kind {
        Kind::Real => match raw.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(Value::Real(x)),
            _ => Err(bad("a finite number")),
        },
        Kind::Count => raw.parse::<usize>().map(Value::Count).map_err(|_| bad("a non-negative integer")),
        Kind::Choice(opts) => opts
            .iter()
            .find(|o| **o == raw)
            .map(|o| Value::Choice(o))
            .ok_or_else(|| bad(&format!("one of {}", opts.join(", ")))),
    }
}
