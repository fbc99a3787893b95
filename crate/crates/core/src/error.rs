use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate direction")]
    DegenerateDirection,
    #[error("model build failed: {0}")]
    ModelBuildFailed(&'static str),
    #[error("interpolation degenerate")]
    InterpolationDegenerate,
    #[error("invalid Gram matrix (min eigenvalue {min_eig:e})")]
    InvalidGram { min_eig: f64 },
    #[error("subspace dimension {dim} exceeds the limit {max}")]
    SubspaceTooLarge { dim: usize, max: usize },
    #[error("regularized system singular")]
    RegularizedSingular,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite objective value at the starting point")]
    NonFiniteStart,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
