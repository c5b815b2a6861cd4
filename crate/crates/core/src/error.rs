use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} = {value} is outside the supported range 1..={cap}{hint}")]
    Bounds {
        what: &'static str,
        value: usize,
        cap: usize,
        hint: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coordinate {index} is not an ordered value (NaN)")]
    Unordered { index: usize },

    #[error("empty point: dimension must be at least 1")]
    EmptyPoint,

    #[error("invalid permutation {0:?}: not a bijection of 0..n")]
    InvalidPermutation(Vec<usize>),

    #[error("coordinates are not nondecreasing")]
    NotSorted,

    #[error("conditioning on a null event: P(Y = {0}) = 0")]
    NullConditioning(String),

    #[error("probabilities sum to {total}, expected 1 within {tol:e}")]
    Normalization { total: f64, tol: f64 },

    #[error("invalid probability {0}")]
    InvalidProbability(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0} did not converge within {1} iterations")]
    Convergence(&'static str, usize),

    #[error("empty fixture catalog")]
    EmptyCatalog,

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
