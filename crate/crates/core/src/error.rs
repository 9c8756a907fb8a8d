use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },

    /// A configuration value is outside its admissible range. `field` names
    /// the offending parameter.
    #[error("invalid configuration `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The linesearch kept shrinking the step without meeting its
    /// acceptance test.
    #[error("linesearch failed after {attempts} shrink attempts (tau trace: {tau_trace:?})")]
    LinesearchFailure { attempts: usize, tau_trace: Vec<f64> },
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig { field, reason: reason.into() }
    }
}
