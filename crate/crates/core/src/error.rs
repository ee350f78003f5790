use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("top-k requires 1 <= k <= {len}, got k = {k}")]
    InvalidK { k: usize, len: usize },

    #[error("matrix is empty")]
    EmptyMatrix,

    #[error("singular value decomposition failed for a {rows}x{cols} matrix")]
    Decomposition { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    Dimension {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("index {index} out of range for {len} {what}")]
    IndexOutOfRange {
        index: usize,
        len: usize,
        what: &'static str,
    },

    #[error("C({n}, {k}) overflows a 64-bit count")]
    CombinatorialOverflow { n: usize, k: usize },

    #[error("scaffold needs about {needed} bytes, above the cap of {cap}")]
    MemoryCap { needed: u128, cap: u128 },

    #[error("{count} patterns exceed the {states} scaffold states")]
    TooManyPatterns { count: usize, states: usize },

    #[error("pattern kind mismatch: expected {expected}, got {got}")]
    KindMismatch {
        expected: &'static str,
        got: &'static str,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inconsistent mutual-information inputs: {0}")]
    InconsistentInputs(String),

    #[error("spec error: {0}")]
    Spec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
