use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input data parsed but violates a structural invariant.
    #[error("validation failed: {0}")]
    Validation(String),

    /// A dense materialization would exceed the configured size guard.
    #[error("capacity exceeded: {what} needs dimension {requested}, limit is {limit}; {hint}")]
    Capacity {
        what: &'static str,
        requested: usize,
        limit: usize,
        hint: &'static str,
    },

    /// A numerical routine failed to converge or produced an inconsistent result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
