use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("capacity exceeded: {what} = {got} (limit {limit})")]
    Capacity {
        what: &'static str,
        got: usize,
        limit: usize,
    },

    #[error("malformed spectrum: {0}")]
    MalformedSpectrum(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("index {index} out of range for {len} modes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("method {method} cannot be applied: {reason}")]
    MethodMismatch { method: String, reason: String },

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("ambiguous label for level {level}: mode {mode} occupation {occupation:.6} (margin {margin:.3e})")]
    AmbiguousLabel {
        level: usize,
        mode: usize,
        occupation: f64,
        margin: f64,
    },

    #[error("label collision: levels {first} and {second} both map to {label}")]
    LabelCollision {
        first: usize,
        second: usize,
        label: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be finite, got {value}")))
    }
}
