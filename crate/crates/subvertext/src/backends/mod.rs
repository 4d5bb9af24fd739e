//! The five pluggable model interfaces the black-box attack consumes.
//!
//! The attacker owns four scorer backends (masked LM, sentence embedder,
//! fluency scorer, POS tagger); only calls to the target model count as
//! queries. Deterministic stub implementations live in [`stub`]; a remote
//! HTTP target client lives in [`remote`].

pub mod remote;
pub mod stub;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::text::TokenizedText;
use crate::types::Prediction;

/// The classifier under attack, reachable only through predictions.
pub trait TargetModel: Send + Sync {
    /// Score the text. Per-class confidences must sum to 1 within 1e-6.
    fn predict(&self, text: &TokenizedText) -> Result<Prediction>;

    /// Whether concurrent calls are safe. The harness serializes attacks
    /// over backends that report `false`.
    fn reentrant(&self) -> bool {
        true
    }
}

/// Masked language model proposing context-aware fills for one position.
pub trait MaskedLmProvider: Send + Sync {
    /// At most `k` distinct fills for the word at `mask_index`,
    /// most-probable first. Sub-word artifacts may be present; the caller
    /// filters them.
    fn top_k(&self, text: &TokenizedText, mask_index: usize, k: usize) -> Vec<String>;

    /// Window probe: fills for `mask_index` with the neighbor at `focus`
    /// emphasized. Real models typically answer identically for every
    /// focus (the default); table stubs key on it to give each probe
    /// position its own list. Backends that prefer the mask-the-neighbor
    /// reading can override this hook.
    fn top_k_with_focus(
        &self,
        text: &TokenizedText,
        mask_index: usize,
        focus: usize,
        k: usize,
    ) -> Vec<String> {
        let _ = focus;
        self.top_k(text, mask_index, k)
    }

    fn reentrant(&self) -> bool {
        true
    }
}

/// Fixed-dimension sentence embedding used for semantic similarity.
pub trait SentenceEmbedder: Send + Sync {
    fn dim(&self) -> usize;

    /// Embed the text. Identical text must produce identical vectors.
    fn embed(&self, text: &str) -> Vec<f64>;

    fn reentrant(&self) -> bool {
        true
    }
}

/// Causal language model scoring how likely `word` is at `word_index`
/// given only the preceding words.
pub trait FluencyScorer: Send + Sync {
    fn word_probability(&self, text: &TokenizedText, word_index: usize, word: &str) -> f64;

    fn reentrant(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PosTag {
    Noun,
    Verb,
    Adjective,
    Adverb,
    Pronoun,
    Determiner,
    Preposition,
    Conjunction,
    Numeral,
    Interjection,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Number {
    Singular,
    Plural,
}

/// POS tag plus the morphological features the refinement rules need.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosAnalysis {
    pub tag: PosTag,
    /// Grammatical number, for nouns.
    pub number: Option<Number>,
    /// Lemma, for verbs.
    pub lemma: Option<String>,
}

impl PosAnalysis {
    pub fn new(tag: PosTag) -> Self {
        PosAnalysis {
            tag,
            number: None,
            lemma: None,
        }
    }

    pub fn with_number(mut self, number: Number) -> Self {
        self.number = Some(number);
        self
    }

    pub fn with_lemma(mut self, lemma: impl Into<String>) -> Self {
        self.lemma = Some(lemma.into());
        self
    }
}

/// Context-sensitive POS tagger with a noun-inflection hook.
pub trait PosTagger: Send + Sync {
    fn tag_in_context(&self, text: &TokenizedText, word_index: usize) -> PosAnalysis;

    /// Force `word` to the given grammatical number. The default applies
    /// regular English suffix rules; lexicon-backed taggers may override
    /// for irregulars.
    fn inflect_noun(&self, word: &str, number: Number) -> String {
        english_noun_inflection(word, number)
    }

    fn reentrant(&self) -> bool {
        true
    }
}

/// Regular English noun number inflection (s/es/ies suffixes).
pub fn english_noun_inflection(word: &str, number: Number) -> String {
    let lower = word.to_lowercase();
    match number {
        Number::Plural => {
            if lower.ends_with('s')
                || lower.ends_with('x')
                || lower.ends_with('z')
                || lower.ends_with("ch")
                || lower.ends_with("sh")
            {
                format!("{lower}es")
            } else if lower.len() > 1 && lower.ends_with('y') {
                let stem: Vec<char> = lower.chars().collect();
                let before = stem[stem.len() - 2];
                if "aeiou".contains(before) {
                    format!("{lower}s")
                } else {
                    format!("{}ies", &lower[..lower.len() - 1])
                }
            } else {
                format!("{lower}s")
            }
        }
        Number::Singular => {
            if lower.ends_with("ies") && lower.len() > 3 {
                format!("{}y", &lower[..lower.len() - 3])
            } else if lower.ends_with("es") && lower.len() > 2 {
                let stem = &lower[..lower.len() - 2];
                if stem.ends_with('x')
                    || stem.ends_with('z')
                    || stem.ends_with("ch")
                    || stem.ends_with("sh")
                    || stem.ends_with('s')
                {
                    stem.to_string()
                } else {
                    // "places" -> "place": only the trailing s was added
                    format!("{stem}e")
                }
            } else if lower.ends_with('s') && !lower.ends_with("ss") && lower.len() > 1 {
                lower[..lower.len() - 1].to_string()
            } else {
                lower
            }
        }
    }
}

/// The five backends an attack consumes, shareable across workers.
#[derive(Clone)]
pub struct BackendSuite {
    pub target: Arc<dyn TargetModel>,
    pub masked_lm: Arc<dyn MaskedLmProvider>,
    pub embedder: Arc<dyn SentenceEmbedder>,
    pub fluency: Arc<dyn FluencyScorer>,
    pub pos_tagger: Arc<dyn PosTagger>,
}

impl BackendSuite {
    pub fn all_reentrant(&self) -> bool {
        self.target.reentrant()
            && self.masked_lm.reentrant()
            && self.embedder.reentrant()
            && self.fluency.reentrant()
            && self.pos_tagger.reentrant()
    }

    /// Same scorers, different target. Used by the harness to pair NLI
    /// samples with their companion text.
    pub fn with_target(&self, target: Arc<dyn TargetModel>) -> BackendSuite {
        BackendSuite {
            target,
            masked_lm: Arc::clone(&self.masked_lm),
            embedder: Arc::clone(&self.embedder),
            fluency: Arc::clone(&self.fluency),
            pos_tagger: Arc::clone(&self.pos_tagger),
        }
    }
}

/// Per-attack query accounting. Every target invocation passes through
/// here: importance masks, per-candidate probes, and combination probes
/// all count, and nothing else does.
#[derive(Debug)]
pub struct QueryMeter {
    count: AtomicU64,
    budget: Option<u64>,
}

impl QueryMeter {
    pub fn new(budget: Option<u64>) -> Self {
        QueryMeter {
            count: AtomicU64::new(0),
            budget,
        }
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::SeqCst)
    }

    /// Issue one counted query, failing first if the budget is spent.
    pub fn predict(&self, target: &dyn TargetModel, text: &TokenizedText) -> Result<Prediction> {
        if let Some(budget) = self.budget {
            if self.count.load(Ordering::SeqCst) >= budget {
                return Err(Error::BudgetExhausted(budget));
            }
        }
        self.count.fetch_add(1, Ordering::SeqCst);
        target.predict(text)
    }
}

/// Instrumentation wrapper that counts raw target invocations. Tests use
/// it to check the meter's accounting against ground truth.
pub struct CountingTarget<T: TargetModel> {
    inner: T,
    calls: AtomicU64,
}

impl<T: TargetModel> CountingTarget<T> {
    pub fn new(inner: T) -> Self {
        CountingTarget {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<T: TargetModel> TargetModel for CountingTarget<T> {
    fn predict(&self, text: &TokenizedText) -> Result<Prediction> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.predict(text)
    }

    fn reentrant(&self) -> bool {
        self.inner.reentrant()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    #[test]
    fn meter_counts_and_enforces_budget() {
        let target = stub::KeywordTarget::sentiment(&[]);
        let meter = QueryMeter::new(Some(2));
        let text = tokenize("hello there").unwrap();
        meter.predict(&target, &text).unwrap();
        meter.predict(&target, &text).unwrap();
        let err = meter.predict(&target, &text).unwrap_err();
        assert!(matches!(err, Error::BudgetExhausted(2)));
        assert_eq!(meter.count(), 2);
    }

    #[test]
    fn counting_target_observes_every_call() {
        let counting = CountingTarget::new(stub::KeywordTarget::sentiment(&[]));
        let meter = QueryMeter::new(None);
        let text = tokenize("hello").unwrap();
        for _ in 0..5 {
            meter.predict(&counting, &text).unwrap();
        }
        assert_eq!(counting.calls(), 5);
        assert_eq!(meter.count(), 5);
    }

    #[test]
    fn noun_inflection_rules() {
        assert_eq!(english_noun_inflection("store", Number::Plural), "stores");
        assert_eq!(english_noun_inflection("box", Number::Plural), "boxes");
        assert_eq!(english_noun_inflection("city", Number::Plural), "cities");
        assert_eq!(english_noun_inflection("day", Number::Plural), "days");
        assert_eq!(english_noun_inflection("shops", Number::Singular), "shop");
        assert_eq!(english_noun_inflection("cities", Number::Singular), "city");
        assert_eq!(english_noun_inflection("boxes", Number::Singular), "box");
        assert_eq!(english_noun_inflection("glass", Number::Singular), "glass");
    }
}
