use thiserror::Error;

pub type Result<T> = std::result::Result<T, QuboError>;

#[derive(Debug, Error)]
pub enum QuboError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("shape mismatch: expected length {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("usage error: {0}")]
    Usage(String),
    #[error("instance too large for exhaustive enumeration: n = {n} > {max}")]
    Capacity { n: usize, max: usize },
    #[error("index {index} out of range for n = {n}")]
    Index { index: usize, n: usize },
    #[error("argument {0} outside the domain [0, 1]")]
    Domain(f64),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("format error on line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
