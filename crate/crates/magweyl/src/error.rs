use thiserror::Error;

#[derive(Debug, Error)]
pub enum MagweylError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("derivative order {requested} exceeds the field's maximum {max}")]
    DerivativeOrder { requested: usize, max: usize },

    #[error("sample grid is empty")]
    EmptySampleGrid,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("shift {0:?} is not an integer multiple of the grid spacing")]
    OffLattice(Vec<f64>),

    #[error("unknown kind `{0}`")]
    UnknownKind(String),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("symbol is not bounded below by {bound}: minimum {min}")]
    NotBoundedBelow { bound: f64, min: f64 },

    #[error("symbol is not elliptic: margin {margin}")]
    NotElliptic { margin: f64 },

    #[error("shift search exhausted after {doublings} doublings (last defect {defect})")]
    ShiftSearchExhausted { doublings: usize, defect: f64 },

    #[error("shift {shift} rejected: defect norm {defect} exceeds 1/2")]
    ShiftRejected { shift: f64, defect: f64 },

    #[error("assembled operator is not Hermitian: deviation {0}")]
    NonHermitian(f64),

    #[error("direct quadrature would need {terms} terms (limit {limit})")]
    CostGuard { terms: u128, limit: u128 },

    #[error("positivity precondition failed: {0}")]
    Positivity(String),

    #[error("boundary tails {tail} exceed threshold {threshold}")]
    BoundaryTails { tail: f64, threshold: f64 },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, MagweylError>;
