use thiserror::Error;

/// Errors raised by the library. Negative mathematical verdicts (an operator
/// that is not hyponormal, an infeasible consistency system) are values, not
/// errors; this type is reserved for malformed input and violated contracts.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WcoError {
    #[error("invalid measure space: {0}")]
    InvalidSpace(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid probability measure: {0}")]
    InvalidMeasure(String),

    #[error("space mismatch: expected {expected} atoms, got {got}")]
    SpaceMismatch { expected: usize, got: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("postcondition `{check}` violated: residual {residual:e} exceeds {tol:e}")]
    Postcondition {
        check: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error("absolute continuity of the pushed-forward weighted measure fails at product atom ({atom}, t={t})")]
    AbsoluteContinuity { atom: String, t: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T, E = WcoError> = std::result::Result<T, E>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(WcoError::SpaceMismatch { expected, got })
    }
}
