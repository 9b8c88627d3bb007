use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("field values must be finite (index {index})")]
    NonFinite { index: usize },

    #[error("input field {index} is linearly dependent on the preceding fields")]
    DegenerateInput { index: usize },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("zero samples requested")]
    ZeroSamples,

    #[error("empty particle-number range")]
    EmptyRange,

    #[error("need at least 3 reliable entries for a decay fit, found {found}")]
    TooFewReliable { found: usize },

    #[error("non-positive overlap mean at n = {n}")]
    NonPositiveMean { n: usize },

    #[error("dimension {dimension} too large for tensor quadrature (max {max})")]
    DimensionTooLarge { dimension: usize, max: usize },

    #[error("unknown {what} `{name}`")]
    Unknown { what: &'static str, name: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
