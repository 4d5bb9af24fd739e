//! Domain types shared by every stage of the attack pipeline.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::TokenizedText;

/// A class index with an optional display name. Equality and hashing use
/// the index only, so `Label::new(1)` matches a named label with id 1.
#[derive(Debug, Clone, Eq, Serialize, Deserialize)]
pub struct Label {
    pub id: usize,
    pub name: Option<String>,
}

impl Label {
    pub fn new(id: usize) -> Self {
        Label { id, name: None }
    }

    pub fn named(id: usize, name: impl Into<String>) -> Self {
        Label {
            id,
            name: Some(name.into()),
        }
    }
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl std::hash::Hash for Label {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.id.hash(state);
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.name {
            Some(name) => write!(f, "{} ({})", self.id, name),
            None => write!(f, "{}", self.id),
        }
    }
}

/// Per-class confidence scores plus the argmax label (ties broken by the
/// lowest class index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub scores: Vec<f64>,
    pub predicted: Label,
}

impl Prediction {
    /// Build a prediction from raw scores, validating that each lies in
    /// [0, 1] and picking the argmax with lowest-index tie-breaking.
    pub fn from_scores(scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::InvalidPrediction("empty score vector".into()));
        }
        for (i, s) in scores.iter().enumerate() {
            if !s.is_finite() || !(0.0..=1.0).contains(s) {
                return Err(Error::InvalidPrediction(format!(
                    "score {s} at class {i} is outside [0, 1]"
                )));
            }
        }
        let mut best = 0;
        for (i, s) in scores.iter().enumerate().skip(1) {
            if *s > scores[best] {
                best = i;
            }
        }
        Ok(Prediction {
            predicted: Label::new(best),
            scores,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.scores.len()
    }

    /// Confidence assigned to `label`, or `None` if the index is out of range.
    pub fn confidence(&self, label: &Label) -> Option<f64> {
        self.scores.get(label.id).copied()
    }
}

/// One word's importance: the truth-label confidence drop caused by
/// masking it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRecord {
    pub word_index: usize,
    pub delta: f64,
}

/// Heuristic used to derive the dynamic threshold from a score list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heuristic {
    Average,
    Median,
    TopN,
    TopMaxesDistance,
    /// No dynamic component; only the static floors filter.
    Constant,
}

impl Heuristic {
    pub const ALL: [Heuristic; 5] = [
        Heuristic::Average,
        Heuristic::Median,
        Heuristic::TopN,
        Heuristic::TopMaxesDistance,
        Heuristic::Constant,
    ];
}

impl std::fmt::Display for Heuristic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Heuristic::Average => "average",
            Heuristic::Median => "median",
            Heuristic::TopN => "top_n",
            Heuristic::TopMaxesDistance => "top_maxes_distance",
            Heuristic::Constant => "constant",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for Heuristic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" => Ok(Heuristic::Average),
            "median" => Ok(Heuristic::Median),
            "top_n" => Ok(Heuristic::TopN),
            "top_maxes_distance" => Ok(Heuristic::TopMaxesDistance),
            "constant" => Ok(Heuristic::Constant),
            other => Err(Error::InvalidConfig(format!(
                "unknown heuristic '{other}' (expected average, median, top_n, top_maxes_distance, or constant)"
            ))),
        }
    }
}

/// Every attack hyperparameter. Field names match the config-file keys
/// one-to-one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    /// Candidates requested per masked-LM probe.
    pub k: usize,
    /// Neighbors per side in the probe window (window size = 2 * window_half).
    pub window_half: usize,
    /// Important words substituted simultaneously per search round.
    pub m: usize,
    /// Refined substitutions kept per important word.
    pub n: usize,
    /// Coefficient of the max-distance threshold heuristic.
    pub lambda: f64,
    /// Rank used by the top-N and max-distance heuristics (distinct from `n`).
    pub topn_rank: usize,
    pub heuristic: Heuristic,
    /// Static lower bound on semantic scores.
    pub semantic_floor: f64,
    /// Static lower bound on syntactic scores.
    pub syntactic_floor: f64,
    /// Cap on replacement rounds.
    pub max_rounds: usize,
    /// Optional hard cap on target-model queries.
    pub query_budget: Option<u64>,
    /// Exclude stopwords from the importance ranking.
    pub exclude_stopwords: bool,
    /// Reuse the round-1 importance ranking instead of recomputing it after
    /// each replacement round.
    pub reuse_importance: bool,
    /// Score semantics on a +/- radius token window instead of the full
    /// text. Intended for long documents; the reported final similarity is
    /// always full-text.
    pub semantic_window: Option<usize>,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            k: 60,
            window_half: 2,
            m: 3,
            n: 4,
            lambda: 1.0,
            topn_rank: 3,
            heuristic: Heuristic::TopMaxesDistance,
            semantic_floor: 0.7,
            syntactic_floor: 0.0,
            max_rounds: 4,
            query_budget: None,
            exclude_stopwords: false,
            reuse_importance: false,
            semantic_window: None,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidConfig("k must be >= 1".into()));
        }
        if self.window_half < 1 {
            return Err(Error::InvalidConfig("window_half must be >= 1".into()));
        }
        if !(1..=4).contains(&self.m) {
            return Err(Error::InvalidConfig("m must be in 1..=4".into()));
        }
        if !(1..=4).contains(&self.n) {
            return Err(Error::InvalidConfig("n must be in 1..=4".into()));
        }
        if self.topn_rank < 1 {
            return Err(Error::InvalidConfig("topn_rank must be >= 1".into()));
        }
        if self.max_rounds < 1 {
            return Err(Error::InvalidConfig("max_rounds must be >= 1".into()));
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidConfig("lambda must be finite".into()));
        }
        if (self.n as u64).pow(self.m as u32) > 256 {
            return Err(Error::InvalidConfig(
                "n^m exceeds the 256-combination cap".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of the part-of-speech check for one candidate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PosVerdict {
    /// Same POS; substitute as-is.
    Accept,
    /// Noun with mismatched number; substitute the carried corrected form.
    Inflected(String),
    /// Incompatible POS, or a verb sharing the original's root.
    Reject,
}

/// One substitution candidate with its refinement scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate {
    /// The raw candidate word (lowercase).
    pub text: String,
    pub semantic: f64,
    pub syntactic: f64,
    pub verdict: PosVerdict,
}

impl ScoredCandidate {
    /// The form actually substituted: the inflection-corrected surface when
    /// the verdict demanded one, the raw candidate otherwise.
    pub fn surface(&self) -> &str {
        match &self.verdict {
            PosVerdict::Inflected(form) => form,
            _ => &self.text,
        }
    }
}

/// A (possibly multi-word) substitution assignment with its measured
/// confidence gap: truth confidence of the base text minus the variant's.
#[derive(Debug, Clone, PartialEq)]
pub struct GapRecord {
    /// word index -> substituted surface form
    pub assignment: BTreeMap<usize, String>,
    pub gap: f64,
}

impl GapRecord {
    pub fn single(word_index: usize, surface: impl Into<String>, gap: f64) -> Self {
        let mut assignment = BTreeMap::new();
        assignment.insert(word_index, surface.into());
        GapRecord { assignment, gap }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackStatus {
    Success,
    Failed,
    SkippedMisclassified,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Substitution {
    pub index: usize,
    pub original: String,
    pub replacement: String,
}

/// Outcome of one attack.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackResult {
    pub status: AttackStatus,
    pub adversarial: TokenizedText,
    pub substitutions: Vec<Substitution>,
    /// Target-model invocations consumed by this attack.
    pub queries: u64,
    /// Full-text cosine similarity between the original and final text.
    pub semantic_similarity: f64,
    pub perturbation_pct: f64,
    /// Replacement rounds entered (0 for skipped samples).
    pub rounds: usize,
}

/// Share of words changed: 100 * distinct substituted indices / token count.
pub fn perturbation_percentage(original: &TokenizedText, substitutions: &[Substitution]) -> f64 {
    if original.is_empty() {
        return 0.0;
    }
    let distinct: std::collections::BTreeSet<usize> =
        substitutions.iter().map(|s| s.index).collect();
    100.0 * distinct.len() as f64 / original.len() as f64
}
