use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported spatial dimension {0}; expected 2 or 3")]
    InvalidDimension(usize),

    #[error("polynomial degree {0} is too small; C0IP needs k >= 2")]
    InvalidDegree(usize),

    #[error("a hierarchy needs at least one level")]
    NoLevels,

    #[error("level {level} out of range for a hierarchy with {num_levels} levels")]
    LevelOutOfRange { level: usize, num_levels: usize },

    #[error("vector length mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("penalty sigma = {sigma} is too small: {what} is not positive definite")]
    NotCoercive { sigma: f64, what: String },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("dense assembly of {dofs} DoFs exceeds the guard of {limit}")]
    DenseGuard { dofs: usize, limit: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
