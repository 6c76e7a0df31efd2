use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("uniform strict hyperbolicity fails between fields {upper} and {lower}: gap {gap}")]
    UshViolation { upper: usize, lower: usize, gap: f64 },

    #[error("field {field} is missing a declared {what}")]
    MissingBounds { field: usize, what: &'static str },

    #[error("field {field} violates its declared constants: {detail}")]
    BoundsViolation { field: usize, detail: String },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("positions are not sorted (index {index})")]
    UnsortedInput { index: usize },

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("time {time} lies outside the recorded horizon [0, {horizon}]")]
    OutOfHorizon { time: f64, horizon: f64 },

    #[error("type {0} is not a rarefaction coordinate")]
    NotRarefactionCoordinate(usize),

    #[error("unsupported oracle family: {0}")]
    UnsupportedFamily(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("event loop made no progress after {0} events")]
    Stalled(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
