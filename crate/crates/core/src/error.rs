use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inputs are well-formed but fail a structural requirement
    /// (dependent basis, mismatched estimates, bad reference sequence, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// Requested work exceeds a configured budget.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// The gliding-hump induction could not satisfy one of its conditions.
    #[error("construction failed at stage {stage}: {condition}")]
    Construction { stage: usize, condition: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn validation<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}

pub(crate) fn budget<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Budget(msg.into()))
}
