use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("singular triangular solve: zero diagonal at index {0}")]
    SingularSolve(usize),
    #[error("Jacobi SVD did not converge within {0} sweeps")]
    SvdNoConvergence(usize),
    #[error("incompatible skeleton/muscle pairing: {skeleton} with {muscle}")]
    IncompatiblePairing { skeleton: String, muscle: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("undefined input: {0}")]
    UndefinedInput(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
