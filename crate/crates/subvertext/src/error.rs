//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input text was empty (or whitespace-only) and cannot be tokenized.
    #[error("input text is empty")]
    EmptyText,

    /// A threshold was requested over an empty score list.
    #[error("cannot compute a threshold over an empty score list")]
    EmptyScores,

    /// An embedding had zero norm, so cosine similarity is undefined.
    #[error("embedding vector has zero norm")]
    ZeroVector,

    /// Every per-word candidate list was empty; there is nothing to combine.
    #[error("search space is empty: no per-word candidates")]
    EmptySearchSpace,

    /// The query budget was reached before the attack finished.
    #[error("query budget of {0} exhausted")]
    BudgetExhausted(u64),

    /// The remote target could not be reached after retrying.
    #[error("target model unavailable: {0}")]
    TargetUnavailable(String),

    /// The remote target answered with something other than the declared protocol.
    #[error("target protocol error: {0}")]
    ProtocolError(String),

    /// A prediction violated its own invariants (empty scores, out-of-range values).
    #[error("invalid prediction: {0}")]
    InvalidPrediction(String),

    /// A label index does not fit the target's class count.
    #[error("invalid label: {0}")]
    InvalidLabel(String),

    /// Configuration failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A dataset row could not be parsed or validated.
    #[error("dataset error at line {line}: {message}")]
    Dataset { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
