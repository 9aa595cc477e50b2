use thiserror::Error;

/// Errors raised by the analytic and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Inputs have inconsistent shapes or are not valid probability tables.
    #[error("structural error: {0}")]
    Structural(String),
    /// An information density was queried at a zero-probability point.
    #[error("undefined point: {0}")]
    UndefinedPoint(String),
    /// The requested enumeration or codebook exceeds the configured size guard.
    #[error("capacity guard: {0}")]
    CapacityGuard(String),
    /// An iterative routine failed to produce a usable result.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn structural(msg: impl Into<String>) -> Error {
    Error::Structural(msg.into())
}
