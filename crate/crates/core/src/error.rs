use thiserror::Error;

/// Errors produced by the clustering pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vector has (near) zero norm")]
    ZeroVector,
    #[error("non-finite value encountered")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("points are antipodal; the minor geodesic is not unique")]
    Antipodal,
    #[error("invalid dimension {0}: need d >= 2")]
    InvalidDim(usize),
    #[error("sample is empty")]
    EmptySample,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("degenerate sample: {0}")]
    Degenerate(&'static str),
    #[error("operation requires d = {expected}, got d = {found}")]
    WrongDim { expected: usize, found: usize },
    #[error("dimension {0} is not supported by this operation")]
    UnsupportedDim(usize),
    #[error("estimated concentration is zero")]
    KappaZero,
    #[error("criterion returned a non-finite score at h = {0}")]
    NonFiniteScore(f64),
    #[error("labelings differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two observations")]
    TooShort,
    #[error("k = {k} exceeds the number of points {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("cluster core {0} is empty")]
    EmptyCore(usize),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("rows with zero norm: {0:?}")]
    ZeroRows(Vec<usize>),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Numerical failures, as opposed to bad input data.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite | Error::NonFiniteScore(_) | Error::KappaZero)
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
