use thiserror::Error;

/// Errors raised by the simulation and bound routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The parameters do not describe a regime the scheme supports.
    #[error("invalid regime: {0}")]
    InvalidRegime(String),
    /// Two objects that must agree in length do not.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// Exhaustive search would enumerate more candidates than allowed.
    #[error("complexity budget exceeded: {what} needs {needed:.3e} candidates, budget is {budget}")]
    ComplexityBudget {
        what: &'static str,
        needed: f64,
        budget: u64,
    },
    /// A structural size requirement is not met.
    #[error("size error: {0}")]
    Size(String),
    /// Rejection sampling did not accept within the retry limit.
    #[error("rejection sampler gave up after {0} retries")]
    RejectionLimit(u64),
    /// An experiment configuration is inconsistent.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
