use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("scalar part must be {expected}, found {found}")]
    ScalarPart { expected: f64, found: f64 },
    #[error("element is not group-like (shuffle residual {residual:e})")]
    NotGroupLike { residual: f64 },
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("time {0} is not a grid point")]
    OffGrid(f64),
    #[error("grids differ")]
    GridMismatch,
    #[error("exponent {0} must be at least 1")]
    ExponentBelowOne(f64),
    #[error("exponents violate 1/p + 1/q > 1 (p = {p}, q = {q})")]
    YoungExponents { p: f64, q: f64 },
    #[error("exact enumeration needs {intervals} intervals on the smaller axis, cap is {cap}")]
    GridTooLarge { intervals: usize, cap: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("covariance matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },
    #[error("kernels differ")]
    KernelMismatch,
    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
