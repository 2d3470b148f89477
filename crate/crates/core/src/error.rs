use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("series not converged after {terms} terms (partial sum {partial:e}, next term {next_term:e})")]
    NotConverged {
        terms: usize,
        partial: f64,
        next_term: f64,
    },

    #[error("empty region: {0}")]
    EmptyRegion(String),

    #[error("empty set: {0}")]
    EmptySet(String),

    #[error("too few usable levels: {0}")]
    TooFewLevels(String),

    #[error("analytic and numeric classifications disagree: {0}")]
    Disagreement(String),

    #[error("indeterminate quadrature: {0}")]
    Indeterminate(String),

    #[error("insufficient replicates: need at least {min}, got {got}")]
    InsufficientReplicates { min: usize, got: usize },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
