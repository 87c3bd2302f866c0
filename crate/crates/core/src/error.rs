use thiserror::Error;

/// Errors raised by the tracking library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// The innovation covariance could not be factorised.
    #[error("innovation covariance is singular (reciprocal condition estimate {rcond:e})")]
    SingularInnovation { rcond: f64 },

    #[error("gating threshold must be positive, got {0}")]
    InvalidThreshold(f64),

    #[error("mixture is empty or has zero total weight")]
    EmptyMixture,

    #[error("all global hypotheses have zero weight")]
    DegenerateWeights,

    #[error("density has no global hypotheses")]
    NoGlobalHypotheses,

    #[error("no global hypothesis can explain the measurement set")]
    NoFeasibleHypothesis,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
