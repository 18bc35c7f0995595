use thiserror::Error;

/// Errors raised anywhere in the kernel engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error in {function}: {detail}")]
    Domain { function: &'static str, detail: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{function} did not converge within {terms} terms")]
    NonConvergence { function: &'static str, terms: usize },

    #[error("{function}: |argument| = {argument} exceeds the series cap {cap}")]
    PrecisionLoss {
        function: &'static str,
        argument: f64,
        cap: f64,
    },

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("no bracket found: {0}")]
    BracketNotFound(String),

    #[error("duplicate location: points {first} and {second} coincide")]
    DuplicateLocation { first: usize, second: usize },

    #[error("matrix is not positive definite (pivot {pivot}, value {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("optimizer did not converge after {iterations} iterations")]
    OptimizerNonConvergence { iterations: usize },

    #[error("too many failed replicates: {failed} of {total}")]
    StudyFailure { failed: usize, total: usize },

    #[error("undefined score: {0}")]
    UndefinedScore(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            function,
            detail: detail.into(),
        }
    }

    /// True for failures of a numerical nature (non-PD, non-convergence),
    /// as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::PrecisionLoss { .. }
                | Error::Quadrature(_)
                | Error::NotPositiveDefinite { .. }
                | Error::OptimizerNonConvergence { .. }
                | Error::StudyFailure { .. }
                | Error::BracketNotFound(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
