use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input outside the domain of a formula (non-positive temperature, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or unsupported configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Moments of a distribution do not define an admissible state.
    #[error("moment degeneracy: {0}")]
    Degenerate(String),

    #[error("root finding failed to converge: {0}")]
    RootFind(String),

    /// Work estimate above the configured budget.
    #[error("cost guard: estimated {estimate:.3e} operations exceeds budget {budget:.3e}")]
    Cost { estimate: f64, budget: f64 },

    #[error("linear solve ill-conditioned (condition estimate {condition:.3e}): {detail}")]
    IllConditioned { condition: f64, detail: String },

    /// Time integration produced NaN or negativity beyond the floor.
    #[error("numerical abort at t = {time}: {detail}")]
    NumericalAbort { time: f64, detail: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Input(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
}
