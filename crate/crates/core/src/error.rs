use thiserror::Error;

/// Errors raised by the library. Every variant carries enough context to
/// point a user at the offending input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("not enough samples: got {got}, need at least {required}")]
    InsufficientSamples { required: u64, got: u64 },

    #[error("{0}; needs manual certificate")]
    NeedsManualCertificate(String),

    #[error("{0}")]
    UndefinedConstant(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
