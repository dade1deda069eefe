use alloc::string::String;

/// Errors raised by the sampler and its linear-algebra substrate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("index ({row}, {col}) out of range for a {n_rows}x{n_cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    /// Pivot at the given (permuted) column fell below the pivot tolerance.
    #[error("matrix is not positive definite (pivot {column})")]
    NotPositiveDefinite { column: usize },
    #[error("point is not strictly inside the box (coordinate {index})")]
    InfeasiblePoint { index: usize },
    #[error("model is infeasible: {0}")]
    ModelInfeasible(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
