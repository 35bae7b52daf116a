use thiserror::Error;

/// Errors raised by the field, functional and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported dimension {0} (must be between 1 and {max})", max = crate::lattice::MAX_DIM)]
    UnsupportedDimension(usize),

    #[error("invalid rectangle: lower corner is not below upper corner")]
    EmptyRectangle,

    #[error("extent overflow: rectangle has more than {cap} entries")]
    ExtentOverflow { cap: u64 },

    #[error("index out of bounds: {0}")]
    OutOfBounds(String),

    #[error("window too large for exact mode: {needed} configurations exceed cap {cap}")]
    CapExceeded { needed: f64, cap: u64 },

    #[error("invalid innovation law: {0}")]
    InvalidLaw(String),

    #[error("missing assignment for site {0}")]
    MissingSite(String),

    #[error("functional must be centered (mean {mean:e})")]
    NotCentered { mean: f64 },

    #[error("centering condition violated on axis {axis}: {condition}")]
    CenteringViolated { axis: usize, condition: String },

    #[error("window exceeds the box [-{m}, {m}]^d")]
    WindowOutsideBox { m: i32 },

    #[error("decomposition verification failed: {0}")]
    VerificationFailed(String),

    #[error("degenerate limit: {0}")]
    Degenerate(String),

    #[error("negative entry {value} at position {position}")]
    NegativeEntry { position: usize, value: f64 },

    #[error("not enough samples: need at least {needed}, got {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("law must be Rademacher (values -1, 1 with probability 1/2 each)")]
    NotRademacher,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
