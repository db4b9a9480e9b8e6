use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("zero-dimensional subspace where a positive dimension is required")]
    ZeroDimensional,

    #[error("subspace dimension {dim} outside the supported range for ambient dimension {ambient}")]
    UnsupportedDimension { dim: usize, ambient: usize },

    #[error("zero vector where a direction is required")]
    ZeroVector,

    #[error("spanning vectors are nearly dependent (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("basis is not orthonormal (deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no tangent space available at point {0}")]
    MissingTangent(usize),

    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },

    #[error("ambient dimension {dim} exceeds the double-description budget of {max}; use membership or thickening queries instead")]
    DualBudgetExceeded { dim: usize, max: usize },

    #[error("reach hypothesis violated at pair ({0}, {1})")]
    ReachHypothesisViolated(usize, usize),

    #[error("outside lemma hypothesis: {0}")]
    OutsideHypothesis(String),

    #[error("every ball around point {point} is too sparse; the smallest usable radius is {min_usable_rho:.6e}")]
    SparseBall { point: usize, min_usable_rho: f64 },

    #[error("rank-deficient neighbourhood around sample {0}")]
    RankDeficient(usize),

    #[error("intrinsic metric violates the metric axioms: chord {chord} exceeds length {length}")]
    ShorterThanChord { chord: f64, length: f64 },

    #[error("ground truth could not be certified: {0}")]
    NotCertified(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
