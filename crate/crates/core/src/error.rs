use thiserror::Error;

/// Errors raised by set operations, system construction and the reachability pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {actual}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// One of the standing preconditions (i)-(v) on the problem data does not hold.
    #[error("assumption ({assumption}) violated: {message}")]
    Assumption {
        assumption: &'static str,
        message: String,
    },

    #[error("time {t} outside [{lo}, {hi}]")]
    TimeOutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("backward transition requested: s = {s} > t = {t}")]
    BackwardTransition { t: f64, s: f64 },

    #[error("transition mode {mode} is not available for this system: {reason}")]
    UnsupportedMode { mode: &'static str, reason: String },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(op: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            op,
            expected,
            actual,
        })
    }
}
