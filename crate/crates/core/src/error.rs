use thiserror::Error;

/// Errors raised by the spike-count machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is numerically singular: smallest/largest eigenvalue ratio {ratio:.3e}")]
    Singular { ratio: f64 },

    #[error("{what} did not converge (last residual {residual:.3e})")]
    NoConvergence { what: String, residual: f64 },

    #[error("support location failed: {0}")]
    Support(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("{failed} of {total} replications failed, first error: {first}")]
    Replications {
        failed: usize,
        total: usize,
        first: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
