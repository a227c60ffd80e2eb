use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("group {0} has no samples")]
    EmptyGroup(usize),
    #[error("group label {label} out of range for k = {k}")]
    GroupOutOfRange { label: usize, k: usize },
    #[error("expected length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("state dimension mismatch: expected {expected}, got {got}")]
    StateDimMismatch { expected: usize, got: usize },
    #[error("action dimension mismatch: expected {expected}, got {got}")]
    ActionDimMismatch { expected: usize, got: usize },
    #[error("state dimension {0} is identically zero and cannot be normalized")]
    DegenerateStateDimension(usize),
    #[error("weights must be nonnegative and sum to 1, got sum {0}")]
    NotOnSimplex(f64),
    #[error("proportions must be positive and sum to 1")]
    BadProportions,
    #[error("rounded size for group {0} is zero; increase total_pairs or its proportion")]
    GroupRoundsToZero(usize),
    #[error("training diverged at epoch {0}: loss is not finite")]
    Diverged(usize),
    #[error("meta update diverged at round {0}")]
    MetaDiverged(usize),
    #[error("empty region filter")]
    EmptyRegionFilter,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown strategy `{0}` (valid: equal, minmax-zero, minmax-refpolicy, minmax-meta, upsample)")]
    UnknownStrategy(String),
    #[error("unknown suite `{0}` (valid: prop1, minmax, metagrad, imbalance, remix-failure, meta-vs-baselines)")]
    UnknownSuite(String),
    #[error("malformed file: {0}")]
    MalformedFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
