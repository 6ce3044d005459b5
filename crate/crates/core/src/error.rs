use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("no convergence after {iterations} iterations ({what})")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("certificate failure: {0}")]
    Certificate(String),

    #[error("linear program {0}")]
    Lp(&'static str),

    #[error("state is not faithful (min eigenvalue {min_eigenvalue:e})")]
    NotFaithful { min_eigenvalue: f64 },

    #[error("composition mismatch: {0}")]
    Composition(String),

    #[error("hypothesis not met: {0}")]
    Hypothesis(String),

    #[error("no optimal expectation: column sums {left:?} vs {right:?} at x = {point}")]
    NoOptimal { point: f64, left: Vec<u32>, right: Vec<u32> },

    #[error("fiber {index} (x = {x}): {source}")]
    Fiber { index: usize, x: f64, source: Box<Error> },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Strips [`Error::Fiber`] context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Fiber { source, .. } => source.root(),
            e => e,
        }
    }

    pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, got })
        }
    }
}
