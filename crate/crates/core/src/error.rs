use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("subspace is empty")]
    EmptySubspace,
    #[error("operator is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("operator is numerically singular (pivot {pivot:e} at index {index})")]
    SingularOperator { index: usize, pivot: f64 },
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("non-zero nonlinearity requires a frozen source trajectory")]
    MissingFrozenTrajectory,
    #[error("trajectory has no samples")]
    EmptyTrajectory,
    #[error("trajectory samples do not match the quadrature grid")]
    NodeMismatch,
    #[error("operation needs a spectral semigroup")]
    UnsupportedBackend,
    #[error("operation needs a linear-growth nonlinearity")]
    UnsupportedGrowthKind,
    #[error("Picard iteration did not converge in {max_iter} iterations (last update {last_delta:e})")]
    NoConvergence { max_iter: usize, last_delta: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn dims(context: &'static str, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            found,
        }
    }
}
