use thiserror::Error;

/// Errors produced by the correlation change test and its supporting routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("bootstrap gave up after {redraws} degenerate redraws")]
    BootstrapExhausted { redraws: usize },
}

impl Error {
    /// True for failures caused by numerically degenerate data rather than
    /// malformed input or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateInput(_)
                | Error::NotPositiveDefinite { .. }
                | Error::BootstrapExhausted { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
