use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A Cholesky pivot was not strictly positive.
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical integration of the beta conditional is degenerate: {0}")]
    QuadratureDegenerate(String),

    #[error("chain diverged at iteration {iteration}: beta = {beta:e}")]
    ChainDiverged { iteration: usize, beta: f64 },

    #[error("replication {replication} of matrix {matrix} with n = {n} failed: {source}")]
    Replication {
        matrix: String,
        n: usize,
        replication: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed data at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
