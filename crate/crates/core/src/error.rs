use thiserror::Error;

/// Errors surfaced by code construction, decoding and the search pipeline.
///
/// Dimension mismatches inside the GF(2) kernel are programming errors and
/// panic instead; everything that depends on user input or on numerical
/// budgets is reported through this type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice {h}x{l} is smaller than the {m}x{m} stencil")]
    LatticeTooSmall { h: usize, l: usize, m: usize },

    #[error("stencil weight {w} exceeds the {m}x{m} cell count")]
    StencilWeightTooLarge { w: usize, m: usize },

    #[error("stabilizers do not commute: rows {row_a} and {row_b} overlap oddly")]
    NonCommuting { row_a: usize, row_b: usize },

    #[error("code has no logical qubits (k = 0)")]
    NoLogicals,

    #[error("enumeration budget exceeded ({visited} nodes, cap {cap})")]
    BudgetExceeded { visited: u64, cap: u64 },

    #[error("no correction found within weight cap {cap}")]
    NoCandidateWithinCap { cap: usize },

    #[error("operation requires a deformed code")]
    NotDeformed,

    #[error("operation requires an undeformed CSS code")]
    AlreadyDeformed,

    #[error("no stable family fit: {reason}")]
    NoStableFit { reason: String },

    #[error("invalid code spec: {0}")]
    InvalidSpec(String),

    #[error("failed to build a logical basis within the sample budget")]
    BasisBudgetExhausted,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
