use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input is empty")]
    EmptyInput,

    #[error("frequencies must be distinct, {0} Hz appears more than once")]
    DuplicateFrequency(f64),

    #[error("noise variance must be non-negative, got {0}")]
    NegativeVariance(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inconsistent configuration: {0}")]
    Configuration(String),

    #[error("input too short: need at least {needed} samples, got {got}")]
    Length { needed: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("eigenvalues must be non-increasing, violated at index {index}")]
    Ordering { index: usize },

    #[error("rotation operator is singular (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed input data: {0}")]
    InputData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
