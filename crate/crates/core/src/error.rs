use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right} bytes")]
    LengthMismatch { left: usize, right: usize },

    #[error("payload must be {expected} bytes, got {actual}")]
    PayloadLength { expected: usize, actual: usize },

    #[error("malformed wire record: {0}")]
    Wire(String),

    #[error("bit count {bits} is not a multiple of {per_symbol} bits per symbol")]
    BitAlignment { bits: usize, per_symbol: usize },

    #[error("unsupported constellation order {0}")]
    UnsupportedOrder(usize),

    #[error("labeling search over order {0} exceeds the exhaustive-search budget (max 8)")]
    SearchBudget(usize),

    #[error("invalid side-information split ({a}, {b}) for {bits} bits per symbol")]
    InvalidSplit { a: usize, b: usize, bits: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no samples fall inside the steady-state window")]
    EmptyWindow,

    #[error("invalid code parameters: {0}")]
    Code(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
