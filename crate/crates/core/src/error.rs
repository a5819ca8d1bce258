use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("entry {index} is negative ({value})")]
    NegativeEntry { index: usize, value: f64 },
    #[error("entries sum to {sum}, cannot normalize")]
    NotNormalizable { sum: f64 },
    #[error("entries sum to {sum}, outside tolerance {tolerance}")]
    SumOutOfTolerance { sum: f64, tolerance: f64 },
    #[error("alphabet needs at least {min} letters, got {got}")]
    AlphabetTooSmall { min: usize, got: usize },
    #[error("channel row {row}: {source}")]
    ChannelRow {
        row: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("gamma must be positive, got {value}")]
    GammaNonpositive { value: f64 },
    #[error("no convergence after {iterations} iterations ({context})")]
    NoConvergence { iterations: usize, context: String },
    #[error("rho pair ({rho1}, {rho2}) too close to determine a threshold")]
    DegeneratePair { rho1: f64, rho2: f64 },
    #[error("enumeration size {size} exceeds cap {cap}")]
    EnumerationCapExceeded { size: u128, cap: u128 },
    #[error("series unusable for slope fitting: {reason}")]
    DegenerateSeries { reason: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
