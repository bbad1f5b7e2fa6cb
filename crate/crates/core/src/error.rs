//! Error type shared across the toolkit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violated an operation precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two operands that must share a shape did not.
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    /// A serialized artifact (image, checkpoint, report) was malformed.
    #[error("format error: {0}")]
    Format(String),

    /// A metric denominator degenerated to zero (e.g. every sample was
    /// already misclassified before the attack).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn shape(expected: impl Into<String>, actual: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            expected: expected.into(),
            actual: actual.into(),
        }
    }
}
