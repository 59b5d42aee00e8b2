use thiserror::Error;

/// Errors raised by parameter construction and the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value is missing, malformed or out of range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A precondition of an operation was violated by the caller.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A linear solve or closed-form evaluation broke down.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An iterative refinement did not converge within its hard cap.
    #[error("convergence failure: {0}")]
    Convergence(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_) | Error::Convergence(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
