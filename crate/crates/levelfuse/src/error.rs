use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An exact backend refused an instance because enumerating it would be
    /// too expensive.
    #[error("enumeration guard exceeded: {0}")]
    GuardExceeded(String),

    /// A value function with no finite maximum; indicates a malformed solver
    /// state and is never expected on valid inputs.
    #[error("value function unbounded above: {0}")]
    Unbounded(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("unknown baseline level {level:?} for predictor {predictor:?}")]
    UnknownLevel { predictor: String, level: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
