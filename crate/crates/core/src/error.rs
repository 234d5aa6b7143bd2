use thiserror::Error;

/// Errors produced by the numerical kernels and estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two operands had incompatible shapes.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    /// A matrix contained NaN or infinite entries.
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    /// An iterative routine hit its iteration cap.
    #[error("{routine} did not converge after {iterations} iterations (last estimate {estimate:e})")]
    NotConverged {
        routine: &'static str,
        iterations: usize,
        estimate: f64,
    },

    /// A dense factorization failed outright.
    #[error("{0} failed to converge")]
    Decomposition(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn shape_mismatch(
    context: &'static str,
    expected: (usize, usize),
    actual: (usize, usize),
) -> Error {
    Error::DimensionMismatch {
        context,
        expected: format!("{}x{}", expected.0, expected.1),
        actual: format!("{}x{}", actual.0, actual.1),
    }
}
