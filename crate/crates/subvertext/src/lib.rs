//! Black-box adversarial example generation for text classifiers.
//!
//! The attack substitutes a handful of words in an input sample so the
//! target model's prediction flips while the text keeps its meaning and
//! fluency. The pipeline: rank words by masking impact, propose
//! substitutions with a masked LM probed across a neighbor window, refine
//! them against per-word dynamic semantic/syntactic thresholds and POS
//! rules, then greedily search single and simultaneous substitutions
//! under an exact query budget.
//!
//! All model access goes through the pluggable [`backends`] traits, so
//! the engine runs identically against deterministic stubs, local models,
//! or a remote prediction API. The [`harness`] module adds dataset
//! ingestion, batched runs with seeded subsampling, metric computation,
//! and ablation sweeps.

pub mod backends;
pub mod candidates;
pub mod error;
pub mod harness;
pub mod importance;
pub mod refinement;
pub mod search;
pub mod text;
pub mod types;

pub use error::{Error, Result};
pub use search::attack;
pub use text::{tokenize, TokenizedText, MASK_SYMBOL};
pub use types::{AttackConfig, AttackResult, AttackStatus, Heuristic, Label, Prediction};
