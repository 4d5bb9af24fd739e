//! Deterministic stub backends for testing and desk-scale runs.
//!
//! Every stub answers from explicit tables or closed-form rules, so test
//! expectations can be computed by hand and two runs with the same inputs
//! are byte-identical.

use std::collections::HashMap;

use crate::backends::{
    FluencyScorer, MaskedLmProvider, Number, PosAnalysis, PosTag, PosTagger, SentenceEmbedder,
    TargetModel,
};
use crate::error::Result;
use crate::text::TokenizedText;
use crate::types::Prediction;

/// Keyword-weight classifier.
///
/// Scoring rule: every class starts with mass 1.0; each word adds its
/// per-class weights (case-insensitive lookup, unknown words add nothing);
/// masses are clamped to at least 0.01 and normalized into probabilities.
///
/// With the binary sentiment convention (class 0 negative, class 1
/// positive) a word of weight w contributes [-w, +w], so
/// "great food" with weights great=0.4, food=0.4 scores
/// masses (0.2, 1.8) -> probabilities (0.1, 0.9).
#[derive(Debug, Clone, Default)]
pub struct KeywordTarget {
    num_classes: usize,
    weights: HashMap<String, Vec<f64>>,
}

impl KeywordTarget {
    pub fn new(num_classes: usize) -> Self {
        assert!(num_classes >= 2);
        KeywordTarget {
            num_classes,
            weights: HashMap::new(),
        }
    }

    /// Add per-class weight deltas for `word`.
    pub fn with_weight(mut self, word: &str, per_class: Vec<f64>) -> Self {
        assert_eq!(per_class.len(), self.num_classes);
        self.weights.insert(word.to_lowercase(), per_class);
        self
    }

    /// Binary sentiment classifier: positive weight pushes class 1.
    pub fn sentiment(word_weights: &[(&str, f64)]) -> Self {
        let mut target = KeywordTarget::new(2);
        for (word, w) in word_weights {
            target = target.with_weight(word, vec![-w, *w]);
        }
        target
    }

    pub fn weight_of(&self, word: &str) -> Option<&[f64]> {
        self.weights.get(&word.to_lowercase()).map(|v| v.as_slice())
    }
}

const MASS_FLOOR: f64 = 0.01;

impl TargetModel for KeywordTarget {
    fn predict(&self, text: &TokenizedText) -> Result<Prediction> {
        let mut masses = vec![1.0f64; self.num_classes];
        for token in text.tokens() {
            if let Some(deltas) = self.weights.get(&token.text().to_lowercase()) {
                for (mass, delta) in masses.iter_mut().zip(deltas) {
                    *mass += delta;
                }
            }
        }
        for mass in &mut masses {
            *mass = mass.max(MASS_FLOOR);
        }
        let total: f64 = masses.iter().sum();
        Prediction::from_scores(masses.into_iter().map(|m| m / total).collect())
    }
}

/// Target answering from an explicit text -> scores table, keyed on the
/// detokenized sentence. Lines not in the table get the default scores.
#[derive(Debug, Clone)]
pub struct TableTarget {
    entries: HashMap<String, Vec<f64>>,
    default: Vec<f64>,
}

impl TableTarget {
    pub fn new(default: Vec<f64>) -> Self {
        TableTarget {
            entries: HashMap::new(),
            default,
        }
    }

    pub fn with_entry(mut self, text: &str, scores: Vec<f64>) -> Self {
        self.entries.insert(text.to_string(), scores);
        self
    }
}

impl TargetModel for TableTarget {
    fn predict(&self, text: &TokenizedText) -> Result<Prediction> {
        let scores = self
            .entries
            .get(&text.detokenize())
            .unwrap_or(&self.default);
        Prediction::from_scores(scores.clone())
    }
}

/// Lookup-table masked LM. Keys are the lowercase word currently at the
/// masked position, optionally refined by the signed offset of the probe
/// focus, so tests can hand each window position its own candidate list.
#[derive(Debug, Clone, Default)]
pub struct TableMaskedLm {
    by_word: HashMap<String, Vec<String>>,
    by_word_offset: HashMap<(String, i64), Vec<String>>,
}

impl TableMaskedLm {
    pub fn new() -> Self {
        TableMaskedLm::default()
    }

    pub fn insert(&mut self, word: &str, candidates: &[&str]) {
        self.by_word.insert(
            word.to_lowercase(),
            candidates.iter().map(|c| c.to_string()).collect(),
        );
    }

    /// Candidate list used only when the probe focus sits at `offset`
    /// positions from the mask.
    pub fn insert_at_offset(&mut self, word: &str, offset: i64, candidates: &[&str]) {
        self.by_word_offset.insert(
            (word.to_lowercase(), offset),
            candidates.iter().map(|c| c.to_string()).collect(),
        );
    }
}

impl MaskedLmProvider for TableMaskedLm {
    fn top_k(&self, text: &TokenizedText, mask_index: usize, k: usize) -> Vec<String> {
        let key = text.word(mask_index).to_lowercase();
        match self.by_word.get(&key) {
            Some(list) => list.iter().take(k).cloned().collect(),
            None => Vec::new(),
        }
    }

    fn top_k_with_focus(
        &self,
        text: &TokenizedText,
        mask_index: usize,
        focus: usize,
        k: usize,
    ) -> Vec<String> {
        let key = (
            text.word(mask_index).to_lowercase(),
            focus as i64 - mask_index as i64,
        );
        match self.by_word_offset.get(&key) {
            Some(list) => list.iter().take(k).cloned().collect(),
            None => self.top_k(text, mask_index, k),
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Bag-of-words embedder: lowercased words hashed into `dim` count
/// buckets. Word order does not matter; identical text gives identical
/// vectors. A text with no words maps to a fixed sentinel basis vector so
/// cosine similarity stays defined.
#[derive(Debug, Clone)]
pub struct BagOfWordsEmbedder {
    dim: usize,
}

impl BagOfWordsEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 2);
        BagOfWordsEmbedder { dim }
    }
}

impl Default for BagOfWordsEmbedder {
    /// 512 dimensions, mirroring the usual sentence-encoder output size.
    fn default() -> Self {
        BagOfWordsEmbedder::new(512)
    }
}

impl SentenceEmbedder for BagOfWordsEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        let mut any = false;
        for chunk in text.split_whitespace() {
            let word: String = chunk
                .chars()
                .filter(|c| c.is_alphanumeric())
                .flat_map(|c| c.to_lowercase())
                .collect();
            if word.is_empty() {
                continue;
            }
            let bucket = (fnv1a(word.as_bytes()) % self.dim as u64) as usize;
            v[bucket] += 1.0;
            any = true;
        }
        if !any {
            v[0] = 1.0;
        }
        v
    }
}

/// Embedder answering from an explicit text -> vector table. Texts absent
/// from the table embed to the zero vector, which downstream cosine code
/// reports as an error; tests use that to exercise the failure path.
#[derive(Debug, Clone)]
pub struct TableEmbedder {
    dim: usize,
    entries: HashMap<String, Vec<f64>>,
}

impl TableEmbedder {
    pub fn new(dim: usize) -> Self {
        TableEmbedder {
            dim,
            entries: HashMap::new(),
        }
    }

    pub fn with_entry(mut self, text: &str, vector: Vec<f64>) -> Self {
        assert_eq!(vector.len(), self.dim);
        self.entries.insert(text.to_string(), vector);
        self
    }
}

impl SentenceEmbedder for TableEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Vec<f64> {
        self.entries
            .get(text)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.dim])
    }
}

/// Probability floor returned for words absent from the fluency tables.
pub const FLUENCY_FLOOR: f64 = 1e-8;

/// Bigram-table fluency scorer. Position 0 uses the unigram table; later
/// positions look up (previous word, word) and fall back to the unigram
/// table, then to the floor.
#[derive(Debug, Clone, Default)]
pub struct BigramFluency {
    unigram: HashMap<String, f64>,
    bigram: HashMap<(String, String), f64>,
}

impl BigramFluency {
    pub fn new() -> Self {
        BigramFluency::default()
    }

    pub fn set_unigram(&mut self, word: &str, p: f64) {
        self.unigram.insert(word.to_lowercase(), p);
    }

    pub fn set_bigram(&mut self, prev: &str, word: &str, p: f64) {
        self.bigram
            .insert((prev.to_lowercase(), word.to_lowercase()), p);
    }
}

impl FluencyScorer for BigramFluency {
    fn word_probability(&self, text: &TokenizedText, word_index: usize, word: &str) -> f64 {
        let w = word.to_lowercase();
        if word_index == 0 {
            return self.unigram.get(&w).copied().unwrap_or(FLUENCY_FLOOR);
        }
        let prev = text.word(word_index - 1).to_lowercase();
        self.bigram
            .get(&(prev, w.clone()))
            .or_else(|| self.unigram.get(&w))
            .copied()
            .unwrap_or(FLUENCY_FLOOR)
    }
}

/// Dictionary POS tagger with suffix heuristics for unlisted words.
///
/// Heuristics: -ly adverb; -ing / -ed verb with the suffix-stripped lemma;
/// trailing -s (not -ss) plural noun; anything else a singular noun. Real
/// deployments replace this with a context-sensitive tagger behind the
/// same trait.
#[derive(Debug, Clone, Default)]
pub struct LexiconTagger {
    lexicon: HashMap<String, PosAnalysis>,
}

impl LexiconTagger {
    pub fn new() -> Self {
        LexiconTagger::default()
    }

    pub fn insert(&mut self, word: &str, analysis: PosAnalysis) {
        self.lexicon.insert(word.to_lowercase(), analysis);
    }

    pub fn with_entry(mut self, word: &str, analysis: PosAnalysis) -> Self {
        self.insert(word, analysis);
        self
    }

    fn heuristic(word: &str) -> PosAnalysis {
        let w = word.to_lowercase();
        if w.ends_with("ly") && w.len() > 3 {
            return PosAnalysis::new(PosTag::Adverb);
        }
        if w.ends_with("ing") && w.len() > 4 {
            return PosAnalysis::new(PosTag::Verb).with_lemma(&w[..w.len() - 3]);
        }
        if w.ends_with("ed") && w.len() > 3 {
            return PosAnalysis::new(PosTag::Verb).with_lemma(&w[..w.len() - 2]);
        }
        if w.chars().all(|c| c.is_ascii_digit()) {
            return PosAnalysis::new(PosTag::Numeral);
        }
        if w.ends_with('s') && !w.ends_with("ss") && w.len() > 2 {
            return PosAnalysis::new(PosTag::Noun)
                .with_number(Number::Plural)
                .with_lemma(crate::backends::english_noun_inflection(
                    &w,
                    Number::Singular,
                ));
        }
        PosAnalysis::new(PosTag::Noun)
            .with_number(Number::Singular)
            .with_lemma(w)
    }
}

impl PosTagger for LexiconTagger {
    fn tag_in_context(&self, text: &TokenizedText, word_index: usize) -> PosAnalysis {
        let word = text.word(word_index).to_lowercase();
        match self.lexicon.get(&word) {
            Some(analysis) => analysis.clone(),
            None => LexiconTagger::heuristic(&word),
        }
    }
}

/// A tagger preloaded with the demo vocabulary, shared by the demo suite
/// and tests.
pub fn demo_tagger() -> LexiconTagger {
    let mut tagger = LexiconTagger::new();
    let adjectives = [
        "great", "nice", "good", "fine", "awesome", "fantastic", "excellent", "amazing",
        "wonderful", "terrific", "pleasant", "enjoyable", "lovely", "terrible", "bad", "awful",
        "horrible", "poor", "boring", "dull", "mediocre", "unpleasant", "disappointing", "worst",
        "best", "rather", "decent", "solid",
    ];
    for w in adjectives {
        tagger.insert(w, PosAnalysis::new(PosTag::Adjective));
    }
    let singular_nouns = [
        "place", "spot", "area", "venue", "food", "meal", "menu", "cuisine", "movie", "film",
        "picture", "show", "staff", "team", "crew", "service", "experience", "location",
        "clinic", "hospital", "store", "shop", "theatre", "atmosphere", "town", "city",
    ];
    for w in singular_nouns {
        tagger.insert(
            w,
            PosAnalysis::new(PosTag::Noun)
                .with_number(Number::Singular)
                .with_lemma(w),
        );
    }
    for (plural, lemma) in [("shops", "shop"), ("stores", "store"), ("places", "place")] {
        tagger.insert(
            plural,
            PosAnalysis::new(PosTag::Noun)
                .with_number(Number::Plural)
                .with_lemma(lemma),
        );
    }
    for (w, lemma) in [
        ("watched", "watch"),
        ("watching", "watch"),
        ("loved", "love"),
        ("hated", "hate"),
        ("enjoyed", "enjoy"),
        ("liked", "like"),
    ] {
        tagger.insert(w, PosAnalysis::new(PosTag::Verb).with_lemma(lemma));
    }
    tagger
}

/// A ready-to-run deterministic suite: keyword sentiment target, synonym
/// tables for the masked LM, bag-of-words embedder, unigram-weighted
/// fluency, and the demo tagger. Used by the CLI's `--backend-suite stub`.
pub fn demo_suite() -> crate::backends::BackendSuite {
    use std::sync::Arc;

    let target = KeywordTarget::sentiment(&[
        ("great", 0.30),
        ("awesome", 0.30),
        ("fantastic", 0.30),
        ("excellent", 0.30),
        ("amazing", 0.30),
        ("wonderful", 0.30),
        ("nice", 0.25),
        ("terrific", 0.25),
        ("best", 0.25),
        ("loved", 0.25),
        ("good", 0.20),
        ("enjoyable", 0.20),
        ("pleasant", 0.20),
        ("fine", 0.10),
        ("decent", 0.10),
        ("terrible", -0.30),
        ("awful", -0.30),
        ("horrible", -0.30),
        ("worst", -0.30),
        ("bad", -0.25),
        ("poor", -0.25),
        ("boring", -0.25),
        ("hated", -0.25),
        ("unpleasant", -0.25),
        ("disappointing", -0.25),
        ("mediocre", -0.20),
        ("dull", -0.20),
    ]);

    let mut mlm = TableMaskedLm::new();
    mlm.insert("great", &["good", "nice", "fine", "terrible", "awful", "decent"]);
    mlm.insert("awesome", &["great", "amazing", "awful", "terrible", "fine"]);
    mlm.insert("fantastic", &["great", "wonderful", "terrible", "horrible"]);
    mlm.insert("excellent", &["great", "good", "poor", "terrible"]);
    mlm.insert("amazing", &["awesome", "wonderful", "awful", "horrible"]);
    mlm.insert("wonderful", &["great", "lovely", "terrible", "horrible"]);
    mlm.insert("nice", &["good", "great", "lovely", "fine", "terrible", "bad"]);
    mlm.insert("good", &["great", "nice", "fine", "bad", "poor", "decent"]);
    mlm.insert("best", &["greatest", "finest", "worst"]);
    mlm.insert("loved", &["enjoyed", "liked", "hated"]);
    mlm.insert("fine", &["good", "decent", "bad", "poor"]);
    mlm.insert("terrible", &["awful", "horrible", "bad", "great", "fine"]);
    mlm.insert("awful", &["terrible", "horrible", "bad", "great"]);
    mlm.insert("horrible", &["terrible", "awful", "great", "wonderful"]);
    mlm.insert("bad", &["poor", "awful", "terrible", "good", "fine"]);
    mlm.insert("poor", &["bad", "awful", "good", "great"]);
    mlm.insert("boring", &["dull", "tedious", "exciting", "fine"]);
    mlm.insert("dull", &["boring", "flat", "fine", "good"]);
    mlm.insert("place", &["spot", "area", "venue", "location"]);
    mlm.insert("food", &["meal", "menu", "cuisine"]);
    mlm.insert("movie", &["film", "picture", "show"]);
    mlm.insert("film", &["movie", "picture", "show"]);
    mlm.insert("staff", &["team", "crew", "service"]);
    mlm.insert("service", &["staff", "experience"]);
    mlm.insert("location", &["place", "spot", "area"]);
    mlm.insert("clinic", &["hospital", "office", "surgery"]);
    mlm.insert("shops", &["stores", "store", "markets"]);

    let mut fluency = BigramFluency::new();
    // Common words score higher than rare ones, so syntactic refinement
    // has a real preference order to work with.
    for (w, p) in [
        ("good", 0.080),
        ("bad", 0.075),
        ("fine", 0.070),
        ("poor", 0.065),
        ("nice", 0.060),
        ("terrible", 0.055),
        ("great", 0.045),
        ("best", 0.044),
        ("worst", 0.042),
        ("awful", 0.040),
        ("lovely", 0.035),
        ("horrible", 0.034),
        ("decent", 0.032),
        ("boring", 0.030),
        ("dull", 0.028),
        ("awesome", 0.026),
        ("wonderful", 0.024),
        ("fantastic", 0.022),
        ("excellent", 0.020),
        ("amazing", 0.018),
        ("mediocre", 0.012),
        ("place", 0.050),
        ("spot", 0.040),
        ("area", 0.038),
        ("venue", 0.020),
        ("location", 0.030),
        ("food", 0.050),
        ("meal", 0.040),
        ("menu", 0.030),
        ("cuisine", 0.018),
        ("movie", 0.050),
        ("film", 0.055),
        ("picture", 0.030),
        ("show", 0.045),
        ("staff", 0.040),
        ("team", 0.050),
        ("crew", 0.030),
        ("service", 0.045),
        ("experience", 0.040),
        ("hospital", 0.045),
        ("clinic", 0.030),
        ("office", 0.050),
        ("surgery", 0.020),
        ("stores", 0.040),
        ("store", 0.045),
        ("shops", 0.035),
        ("markets", 0.025),
        ("enjoyed", 0.040),
        ("liked", 0.045),
        ("loved", 0.040),
        ("hated", 0.030),
    ] {
        fluency.set_unigram(w, p);
    }

    crate::backends::BackendSuite {
        target: Arc::new(target),
        masked_lm: Arc::new(mlm),
        embedder: Arc::new(BagOfWordsEmbedder::new(256)),
        fluency: Arc::new(fluency),
        pos_tagger: Arc::new(demo_tagger()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;
    use crate::types::Label;

    #[test]
    fn keyword_target_published_rule() {
        // masses: neg 1 - 0.8 = 0.2, pos 1 + 0.8 = 1.8 -> (0.1, 0.9)
        let target = KeywordTarget::sentiment(&[("great", 0.4), ("food", 0.4)]);
        let p = target.predict(&tokenize("great food").unwrap()).unwrap();
        assert!((p.scores[1] - 0.9).abs() < 1e-12);
        assert!((p.scores[0] - 0.1).abs() < 1e-12);
        assert_eq!(p.predicted, Label::new(1));
    }

    #[test]
    fn uniform_target_breaks_tie_low() {
        let target = KeywordTarget::sentiment(&[]);
        let p = target.predict(&tokenize("anything at all").unwrap()).unwrap();
        assert_eq!(p.scores, vec![0.5, 0.5]);
        assert_eq!(p.predicted, Label::new(0));
    }

    #[test]
    fn keyword_target_clamps_mass() {
        let target = KeywordTarget::sentiment(&[("dreadful", 2.0)]);
        let p = target.predict(&tokenize("dreadful").unwrap()).unwrap();
        // neg mass clamps at 0.01, pos mass 3.0
        assert!(p.scores.iter().all(|s| (0.0..=1.0).contains(s)));
        assert!((p.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(p.predicted, Label::new(1));
    }

    #[test]
    fn masked_lm_truncates_to_k() {
        let mut mlm = TableMaskedLm::new();
        mlm.insert("nice", &["good", "fine", "great"]);
        let text = tokenize("nice place").unwrap();
        assert_eq!(mlm.top_k(&text, 0, 2), vec!["good", "fine"]);
        // k beyond the table: the full list, no padding
        assert_eq!(mlm.top_k(&text, 0, 10).len(), 3);
    }

    #[test]
    fn masked_lm_offset_entries_win() {
        let mut mlm = TableMaskedLm::new();
        mlm.insert("nice", &["good"]);
        mlm.insert_at_offset("nice", 1, &["fine", "lovely"]);
        let text = tokenize("nice place").unwrap();
        assert_eq!(mlm.top_k_with_focus(&text, 0, 1, 5), vec!["fine", "lovely"]);
        // unlisted offset falls back to the word table
        assert_eq!(mlm.top_k_with_focus(&text, 0, 0, 5), vec!["good"]);
    }

    #[test]
    fn masked_lm_single_word_text() {
        let mut mlm = TableMaskedLm::new();
        mlm.insert("good", &["fine"]);
        let text = tokenize("good").unwrap();
        assert_eq!(mlm.top_k(&text, 0, 3), vec!["fine"]);
    }

    #[test]
    fn bow_embedder_is_deterministic_and_order_blind() {
        let emb = BagOfWordsEmbedder::new(32);
        assert_eq!(emb.embed("a b"), emb.embed("a b"));
        assert_eq!(emb.embed("a b"), emb.embed("b a"));
        assert_ne!(emb.embed("a b"), emb.embed("a c"));
    }

    #[test]
    fn bow_embedder_default_dim_is_512() {
        assert_eq!(BagOfWordsEmbedder::default().dim(), 512);
    }

    #[test]
    fn bow_embedder_guards_wordless_text() {
        let emb = BagOfWordsEmbedder::new(8);
        let v = emb.embed("!!!");
        assert!(v.iter().any(|x| *x != 0.0));
    }

    #[test]
    fn bigram_fluency_lookup_chain() {
        let mut fl = BigramFluency::new();
        fl.set_bigram("very", "good", 0.3);
        fl.set_unigram("good", 0.05);
        fl.set_unigram("very", 0.02);
        let text = tokenize("very good").unwrap();
        assert_eq!(fl.word_probability(&text, 1, "good"), 0.3);
        // first word: unconditional probability
        assert_eq!(fl.word_probability(&text, 0, "very"), 0.02);
        // unseen everywhere: the floor
        assert_eq!(fl.word_probability(&text, 1, "zzz"), FLUENCY_FLOOR);
    }

    #[test]
    fn tagger_lexicon_and_heuristics() {
        let tagger = LexiconTagger::new();
        let text = tokenize("he watched the shops closely").unwrap();
        let watched = tagger.tag_in_context(&text, 1);
        assert_eq!(watched.tag, PosTag::Verb);
        assert_eq!(watched.lemma.as_deref(), Some("watch"));
        let shops = tagger.tag_in_context(&text, 3);
        assert_eq!(shops.tag, PosTag::Noun);
        assert_eq!(shops.number, Some(Number::Plural));
        assert_eq!(shops.lemma.as_deref(), Some("shop"));
        let closely = tagger.tag_in_context(&text, 4);
        assert_eq!(closely.tag, PosTag::Adverb);
    }

    #[test]
    fn tagger_clinic_in_context() {
        let tagger = demo_tagger();
        let text =
            tokenize("Refused to take my cat for cremation cause I had not been to the clinic previously")
                .unwrap();
        let clinic = tagger.tag_in_context(&text, 14);
        assert_eq!(clinic.tag, PosTag::Noun);
        assert_eq!(clinic.number, Some(Number::Singular));
    }

    #[test]
    fn tagger_is_deterministic() {
        let tagger = LexiconTagger::new();
        let text = tokenize("the clinic closed").unwrap();
        assert_eq!(
            tagger.tag_in_context(&text, 1),
            tagger.tag_in_context(&text, 1)
        );
    }
}
