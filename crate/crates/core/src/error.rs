use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is singular or not positive definite (pivot {pivot:e} at index {index})")]
    SingularMatrix { index: usize, pivot: f64 },

    #[error("eigendecomposition did not converge after {sweeps} sweeps")]
    NonConvergence { sweeps: usize },

    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {gap:e}")]
    NotSymmetric { i: usize, j: usize, gap: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("column {0} has zero variance")]
    ConstantColumn(usize),

    #[error("coordinate descent did not converge at lambda = {lambda:e} after {sweeps} sweeps")]
    MaxIterations { lambda: f64, sweeps: usize },

    #[error("every initial coefficient is zero; all adaptive weights are infinite")]
    AllWeightsInfinite,

    #[error("GCV is undefined at every grid point (trace(H)/n >= 1)")]
    DegenerateGcv,

    #[error("coefficient specification does not match s = {s}: {detail}")]
    SpecMismatch { s: usize, detail: String },

    #[error("{0}")]
    Io(String),
}

impl Error {
    /// True for failures of a numerical routine, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularMatrix { .. }
                | Error::NonConvergence { .. }
                | Error::MaxIterations { .. }
                | Error::AllWeightsInfinite
                | Error::DegenerateGcv
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
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
