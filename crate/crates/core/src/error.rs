use thiserror::Error;

/// Errors raised by the density structure and its building blocks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KdeError {
    /// An argument is outside its documented range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The requested configuration would exceed a configured size limit.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A hash table and the dataset disagree about where a point lives.
    #[error("consistency violation: {0}")]
    Consistency(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// A previous ensemble update failed part-way; the ensemble refuses queries.
    #[error("ensemble is poisoned by a failed update")]
    Poisoned,

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for KdeError {
    fn from(err: std::io::Error) -> Self {
        KdeError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, KdeError>;

pub(crate) fn param_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(KdeError::Parameter(msg.into()))
}
