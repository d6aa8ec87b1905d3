use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhiFemError {
    #[error("invalid mesh parameters: {0}")]
    InvalidMesh(String),

    #[error("unsupported polynomial degree {0} (supported: 1..=3)")]
    UnsupportedDegree(usize),

    #[error("quadrature exactness {requested} exceeds the supported cap {cap}")]
    UnsupportedExactness { requested: usize, cap: usize },

    #[error("non-finite value {value} produced at ({x}, {y})")]
    NonFinite { x: f64, y: f64, value: f64 },

    #[error("no triangle intersects the negative set of the level-set")]
    EmptyActiveSet,

    #[error("triangle {0} is not in the active mesh")]
    InactiveTriangle(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is singular or the factorization broke down")]
    SingularMatrix,

    #[error("no convergence after {iterations} iterations (best relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("mesh sequence is not a halving sequence at position {0}")]
    NonHalvingSequence(usize),

    #[error("exact solution vanishes on the active domain")]
    ZeroNormalizer,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl PhiFemError {
    /// Stable machine-readable name, used in CSV status columns.
    pub fn name(&self) -> &'static str {
        match self {
            PhiFemError::InvalidMesh(_) => "InvalidMesh",
            PhiFemError::UnsupportedDegree(_) => "UnsupportedDegree",
            PhiFemError::UnsupportedExactness { .. } => "UnsupportedExactness",
            PhiFemError::NonFinite { .. } => "NonFinite",
            PhiFemError::EmptyActiveSet => "EmptyActiveSet",
            PhiFemError::InactiveTriangle(_) => "InactiveTriangle",
            PhiFemError::DimensionMismatch { .. } => "DimensionMismatch",
            PhiFemError::SingularMatrix => "SingularMatrix",
            PhiFemError::NoConvergence { .. } => "NoConvergence",
            PhiFemError::NonHalvingSequence(_) => "NonHalvingSequence",
            PhiFemError::ZeroNormalizer => "ZeroNormalizer",
            PhiFemError::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

pub type Result<T> = std::result::Result<T, PhiFemError>;
