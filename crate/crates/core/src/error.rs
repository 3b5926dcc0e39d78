use thiserror::Error;

/// Failure modes shared by every layer of the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("model invariant violated: {0}")]
    ModelViolation(String),

    #[error("classification ambiguous within tolerance: {0}")]
    NearDegenerate(String),

    #[error("isometry is not loxodromic: {0}")]
    NotLoxodromic(String),

    #[error("enumeration budget exceeded: more than {cap} entries")]
    BudgetExceeded { cap: usize },

    #[error("fundamental-domain reduction did not terminate after {0} steps")]
    NonTerminating(usize),

    #[error("unsupported group: {0}")]
    UnsupportedGroup(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("boundary endpoints coincide")]
    CoincidentEndpoints,

    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, GeoError>;
