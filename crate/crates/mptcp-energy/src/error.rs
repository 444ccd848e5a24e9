use thiserror::Error;

/// Errors produced by the library. The CLI maps these onto exit codes:
/// config/schema problems exit 2, non-convergence exits 3, numeric blowups exit 4.
#[derive(Error, Debug)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("undefined ratio: aggregate rate is zero")]
    UndefinedRatio,

    #[error("solver expects exactly {expected} paths, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("instance too large for exhaustive search: {got} paths exceeds limit {limit}")]
    Size { got: usize, limit: usize },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("config parse error: {0}")]
    ConfigParse(#[from] serde_json::Error),

    #[error("simulation did not converge within the horizon ({horizon} s)")]
    NonConvergence { horizon: f64 },

    #[error("numerical blowup at t={t}: {detail}")]
    NumericalBlowup { t: f64, detail: String },

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
