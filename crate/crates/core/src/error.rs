//! Crate-wide error type.

/// Errors surfaced by model construction, sampling, and bound evaluation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An exhaustive computation would exceed its configured cap.
    #[error("{context}: required size {required} exceeds cap {cap}")]
    CapExceeded {
        context: &'static str,
        required: u128,
        cap: u128,
    },

    /// A scalar parameter lies outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two sequences that must have equal lengths do not.
    #[error("length mismatch: {context} (left {left}, right {right})")]
    LengthMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    /// A dense graph allocation was refused because the node count exceeds
    /// the memory budget.
    #[error("dense sampling refused: {n} nodes exceeds the budget of {max_n} (use restricted sampling)")]
    SizeCap { n: usize, max_n: usize },

    /// Coverage is not divisible by a support size that the profile set
    /// requires.
    #[error("coverage {coverage} is not divisible by support size {support_size}")]
    Divisibility { coverage: u32, support_size: u32 },

    /// The requested measurement plan cannot be realized on the given
    /// community assignment.
    #[error("infeasible plan: {0}")]
    Infeasible(String),

    /// A prior vector is not a probability distribution of the right length.
    #[error("invalid prior: {0}")]
    PriorInvalid(String),

    /// More communities than the permutation-matching evaluator supports.
    #[error("evaluation supports at most {max} communities, got {got}")]
    TooManyCommunities { got: usize, max: usize },

    /// A symbolic scaling could not be matched against the regime tables.
    #[error("unclassifiable scaling: {0}")]
    UnclassifiableScaling(String),

    /// Structurally invalid model parameters or data.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Malformed serialized data encountered during import.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
