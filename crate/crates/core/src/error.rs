use thiserror::Error;

/// Errors produced by simulation, identification, and compensation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter, series, or configuration value violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input data (CSV content, grids, column layout) is malformed.
    #[error("data error: {0}")]
    Data(String),

    /// A state left the divergence guard (non-finite or beyond the magnitude cap).
    #[error("numerical divergence at step {step}")]
    Diverged { step: usize },

    /// The per-step implicit solver did not converge within its iteration cap.
    #[error("implicit solver failed to converge at step {step}")]
    SolverFailed { step: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
