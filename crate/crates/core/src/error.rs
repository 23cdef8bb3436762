use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid profile: entry {index} has non-positive or non-finite value {value}")]
    InvalidProfile { index: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state budget exceeded: {states} states > budget {budget}")]
    Capacity { states: u128, budget: usize },

    #[error("{method} did not converge within {iterations} iterations")]
    Convergence { method: &'static str, iterations: usize },

    #[error("angle count is ambiguous: kappa = {kappa} lies within 1e-13 relative of an eigenvalue")]
    AmbiguousCount { kappa: f64 },

    #[error("bracket failure: {0}")]
    Bracket(String),

    #[error("invariant `{property}` violated: {detail}")]
    Invariant { property: String, detail: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invariant(property: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Invariant { property: property.into(), detail: detail.into() }
    }

    pub fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant { .. } | Error::Convergence { .. } | Error::AmbiguousCount { .. } => 2,
            Error::Capacity { .. } => 3,
            Error::Bracket(_) => 2,
            _ => 4,
        }
    }
}
