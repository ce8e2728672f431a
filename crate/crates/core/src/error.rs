use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("precision exhausted after reaching depth {achieved} of {requested}: {detail}")]
    PrecisionExhausted {
        achieved: usize,
        requested: usize,
        detail: String,
    },

    #[error("no convergence (residual {residual:.3e}): {detail}")]
    NonConvergence { residual: f64, detail: String },

    #[error("near-singular matrix (condition number {cond:.3e})")]
    Singular { cond: f64 },

    #[error("norm bound violated: {0}")]
    NormBound(String),

    #[error("window not covered: {0}")]
    Uncovered(String),
}

pub type Result<T> = std::result::Result<T, QpError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(QpError::InvalidInput(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(QpError::Domain(msg.into()))
}
