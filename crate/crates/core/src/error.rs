use thiserror::Error;

use crate::metric::FourPointWitness;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed structure: dimension mismatches, unknown ids, broken trees.
    #[error("structural error: {0}")]
    Structural(String),
    /// A value outside its admissible range (NaN, negative distance, x = y, ...).
    #[error("value error: {0}")]
    Value(String),
    /// The input metric does not satisfy the four-point condition.
    #[error("not a tree metric: {0}")]
    NotTreeMetric(Box<FourPointWitness>),
    /// An operation was called outside its precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("numerical failure: {message} (residual {residual:e})")]
    Numerical { message: String, residual: f64 },
    /// A construction produced a state its own invariants forbid. Always a bug.
    #[error("internal invariant violated at stage {stage}: {message}")]
    Invariant { stage: usize, message: String },
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn value(msg: impl Into<String>) -> Self {
        Error::Value(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
