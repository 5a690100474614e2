mod config;
mod output;
mod run;

use std::io::Write;
use std::process::ExitCode;

use config::ParseError;
use idqhe_core::Error;

const USAGE: u8 = 2;
const SOLVER: u8 = 3;
const NOT_AN_ENGINE: u8 = 4;
const IO: u8 = 5;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_) | Error::UnsupportedLimit(_) | Error::Domain(_) => USAGE,
        Error::NotAnEngine { .. } => NOT_AN_ENGINE,
        Error::SolverFailure { .. }
        | Error::ResourceLimit { .. }
        | Error::Grid(_)
        | Error::Inversion(_)
        | Error::Matching(_) => SOLVER,
    }
}

fn main() -> ExitCode {
    let env_threads = std::env::var("IDQHE_THREADS").ok();
    let cfg = match config::parse_args(std::env::args_os(), env_threads.as_deref()) {
        Ok(cfg) => cfg,
        Err(ParseError::Clap(e)) => e.exit(),
        Err(ParseError::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            return ExitCode::from(USAGE);
        }
        Err(ParseError::Io(path, e)) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(IO);
        }
    };

    if let Some(k) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("warning: thread pool already initialised: {e}");
        }
    }

    let report = match run::execute(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let text = output::render(&cfg, &report);
    let written = match &cfg.output {
        Some(path) => std::fs::write(path, &text).map_err(|e| (path.display().to_string(), e)),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| ("stdout".to_string(), e)),
    };
    if let Err((target, e)) = written {
        eprintln!("error: cannot write {target}: {e}");
        return ExitCode::from(IO);
    }
    match report.deferred {
        Some(e) => {
            eprintln!("error: some rows are missing (marked {}); first failure: {e}", output::MISSING);
            ExitCode::from(exit_code(&e))
        }
        None => ExitCode::SUCCESS,
    }
}
