use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("component index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("support of size {size} exceeds the enumeration limit {limit}")]
    SupportTooLarge { size: u128, limit: u128 },

    #[error("a reference solution is required for {0}")]
    MissingReference(&'static str),

    #[error("estimator has not been initialized")]
    Uninitialized,

    #[error("step size {gamma} violates the admissible threshold {threshold}")]
    StepThreshold { gamma: f64, threshold: f64 },

    #[error("constants violate L <= L_max <= n L (L = {l}, L_max = {l_max}, n = {n})")]
    InconsistentConstants { l: f64, l_max: f64, n: usize },

    #[error("diverged at iteration {iteration}: suboptimality {subopt:e} exceeds {limit:e}")]
    Diverged { iteration: u64, subopt: f64, limit: f64 },

    #[error("invalid CSV record: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
