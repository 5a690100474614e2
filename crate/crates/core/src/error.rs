use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported limit: {0}")]
    UnsupportedLimit(String),

    #[error("{solver} did not converge after {iterations} iterations (last residual {residual:e}){context}")]
    SolverFailure {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        context: String,
    },

    #[error("state enumeration exceeded the cap of {cap} states ({reached} visited)")]
    ResourceLimit { cap: usize, reached: usize },

    #[error("momentum cutoff too small: {0}; increase the cutoff")]
    Grid(String),

    #[error("density inversion failed: {0}")]
    Inversion(String),

    #[error("entropy matching failed: {0}")]
    Matching(String),

    #[error("not an engine: heat intake Q2 = {q2:e} is not positive")]
    NotAnEngine { q2: f64 },

    #[error("domain error: {0}")]
    Domain(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Attaches extra context to a solver failure; other variants pass through.
    pub fn with_context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            Error::SolverFailure {
                solver,
                iterations,
                residual,
                context,
            } => Error::SolverFailure {
                solver,
                iterations,
                residual,
                context: format!("{context} [{ctx}]"),
            },
            other => other,
        }
    }
}
