use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix is not positive definite after jitter up to {max_jitter:e} (dim {dim})")]
    Factorization { dim: usize, max_jitter: f64 },

    #[error("no active candidates left in the pool")]
    EmptyPool,

    #[error("budget {budget} exceeds the {available} active pool candidates")]
    BudgetExceedsPool { budget: usize, available: usize },

    #[error("label oracle failure: {0}")]
    Oracle(String),

    #[error("non-finite acquisition score at candidate {0}")]
    NonFiniteScore(usize),

    #[error("clean outputs are required for vs_clean evaluation")]
    MissingCleanOutputs,

    #[error("dataset file not found: {0}")]
    MissingFile(PathBuf),

    #[error("header does not match schema `{schema}`: {detail}")]
    HeaderMismatch { schema: String, detail: String },

    #[error("all {0} rows were dropped while loading")]
    AllRowsDropped(usize),

    #[error("subsample of {requested} rows requested from a dataset of {available}")]
    SubsampleTooLarge { requested: usize, available: usize },

    #[error("analysis assumption violated: {0}")]
    AssumptionViolation(String),

    #[error("truncation [-{trunc}, {trunc}] keeps only {mass:.9} of the probability mass")]
    TruncationMass { trunc: f64, mass: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
