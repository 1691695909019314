use thiserror::Error;

/// Errors raised by the operator, family, integration and model layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("operator has dimension zero")]
    EmptyOperator,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid norm parameter p = {0}")]
    InvalidNorm(f64),

    #[error("invalid projection sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid spectral family: {0}")]
    InvalidFamily(String),

    #[error("commutation violated at n = {n}, lambda = {lambda}: residual {residual:e}")]
    Commutation { n: i64, lambda: f64, residual: f64 },

    #[error("support mismatch: expected [{expected_lo}, {expected_hi}], found [{lo}, {hi}]")]
    SupportMismatch {
        expected_lo: f64,
        expected_hi: f64,
        lo: f64,
        hi: f64,
    },

    #[error("function is not strictly increasing near {at}")]
    NotMonotone { at: f64 },

    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("evaluation failed at {at}: {reason}")]
    Evaluation { at: f64, reason: String },

    #[error("integral did not converge on [{lo}, {hi}] (last increment {increment:e})")]
    NonConvergence { lo: f64, hi: f64, increment: f64 },

    #[error("decomposition check failed for basis vector {basis} at n = {n}: residual {residual:e}")]
    Decomposition { basis: usize, n: i64, residual: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
