//! Step 3: score candidates semantically and syntactically, derive
//! per-word dynamic thresholds, apply the static floors, and enforce POS
//! compatibility. What survives is the purified candidate list.

use crate::backends::{
    BackendSuite, FluencyScorer, PosTag, PosTagger, SentenceEmbedder,
};
use crate::error::{Error, Result};
use crate::text::TokenizedText;
use crate::types::{AttackConfig, Heuristic, PosVerdict, ScoredCandidate};

/// Dynamic thresholds for one word's candidate set, together with the
/// effective bounds after the static floors are applied.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdOutcome {
    pub heuristic: Heuristic,
    pub dt_semantic: f64,
    pub dt_syntactic: f64,
    pub effective_semantic: f64,
    pub effective_syntactic: f64,
}

fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(dot / (na * nb))
}

/// Cosine similarity between the embeddings of the full text and the full
/// text with `candidate` substituted at `word_index`.
pub fn semantic_score(
    text: &TokenizedText,
    word_index: usize,
    candidate: &str,
    embedder: &dyn SentenceEmbedder,
) -> Result<f64> {
    let base = embedder.embed(&text.detokenize());
    let substituted = text.with_word(word_index, candidate);
    let variant = embedder.embed(&substituted.detokenize());
    cosine(&base, &variant)
}

/// Windowed variant for long documents: only tokens within `radius` of
/// the substitution are embedded.
pub fn semantic_score_windowed(
    text: &TokenizedText,
    word_index: usize,
    candidate: &str,
    embedder: &dyn SentenceEmbedder,
    radius: usize,
) -> Result<f64> {
    let base = embedder.embed(&text.window_text(word_index, radius));
    let substituted = text.with_word(word_index, candidate);
    let variant = embedder.embed(&substituted.window_text(word_index, radius));
    cosine(&base, &variant)
}

/// Candidate probability minus original-word probability, both under the
/// same left context at `word_index`.
pub fn syntactic_score(
    text: &TokenizedText,
    word_index: usize,
    candidate: &str,
    fluency: &dyn FluencyScorer,
) -> f64 {
    let p_substitution = fluency.word_probability(text, word_index, candidate);
    let p_original = fluency.word_probability(text, word_index, text.word(word_index));
    p_substitution - p_original
}

/// Derive a threshold from a score distribution.
///
/// average/median are the plain statistics; top_n is the rank-th score
/// after a descending sort (clamped to the last element on short lists);
/// top_maxes_distance is S_N - lambda * (S_max - S_N); constant returns
/// negative infinity so only the static floors act.
pub fn dynamic_threshold(
    scores: &[f64],
    heuristic: Heuristic,
    lambda: f64,
    topn_rank: usize,
) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    let rank = topn_rank.max(1);
    match heuristic {
        Heuristic::Average => Ok(scores.iter().sum::<f64>() / scores.len() as f64),
        Heuristic::Median => {
            let mut sorted = scores.to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mid = sorted.len() / 2;
            if sorted.len() % 2 == 1 {
                Ok(sorted[mid])
            } else {
                Ok((sorted[mid - 1] + sorted[mid]) / 2.0)
            }
        }
        Heuristic::TopN | Heuristic::TopMaxesDistance => {
            let mut sorted = scores.to_vec();
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let nth = sorted[rank.min(sorted.len()) - 1];
            match heuristic {
                Heuristic::TopN => Ok(nth),
                _ => Ok(nth - lambda * (sorted[0] - nth)),
            }
        }
        Heuristic::Constant => Ok(f64::NEG_INFINITY),
    }
}

/// Thresholds for one word's candidate scores, floored by the static
/// bounds.
pub fn compute_thresholds(
    semantic_scores: &[f64],
    syntactic_scores: &[f64],
    cfg: &AttackConfig,
) -> Result<ThresholdOutcome> {
    let dt_semantic =
        dynamic_threshold(semantic_scores, cfg.heuristic, cfg.lambda, cfg.topn_rank)?;
    let dt_syntactic =
        dynamic_threshold(syntactic_scores, cfg.heuristic, cfg.lambda, cfg.topn_rank)?;
    Ok(ThresholdOutcome {
        heuristic: cfg.heuristic,
        dt_semantic,
        dt_syntactic,
        effective_semantic: dt_semantic.max(cfg.semantic_floor),
        effective_syntactic: dt_syntactic.max(cfg.syntactic_floor),
    })
}

/// Grammatical compatibility of `candidate` at `word_index`, tagged with
/// the substitution already implemented in the text.
///
/// Same POS: accept. Noun with a number mismatch: accept after inflecting
/// the candidate to the original's number. Verb sharing the original's
/// lemma: reject. Any other POS mismatch: reject.
pub fn pos_compatible(
    text: &TokenizedText,
    word_index: usize,
    candidate: &str,
    tagger: &dyn PosTagger,
) -> PosVerdict {
    let original = tagger.tag_in_context(text, word_index);
    let substituted = text.with_word(word_index, candidate);
    let proposed = tagger.tag_in_context(&substituted, word_index);
    if proposed.tag != original.tag {
        return PosVerdict::Reject;
    }
    match original.tag {
        PosTag::Verb => {
            let same_root = match (&original.lemma, &proposed.lemma) {
                (Some(a), Some(b)) => a.eq_ignore_ascii_case(b),
                _ => false,
            };
            if same_root {
                PosVerdict::Reject
            } else {
                PosVerdict::Accept
            }
        }
        PosTag::Noun => match (original.number, proposed.number) {
            (Some(want), Some(have)) if want != have => {
                PosVerdict::Inflected(tagger.inflect_noun(candidate, want))
            }
            _ => PosVerdict::Accept,
        },
        _ => PosVerdict::Accept,
    }
}

/// Filter a candidate set down to the purified list: candidates strictly
/// above both effective thresholds whose POS verdict is not a rejection.
/// Inflected forms replace raw candidates; output is ordered by semantic
/// score descending. An empty result is a valid outcome.
pub fn refine(
    text: &TokenizedText,
    word_index: usize,
    candidates: &[String],
    cfg: &AttackConfig,
    backends: &BackendSuite,
) -> Result<Vec<ScoredCandidate>> {
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let mut semantic_scores = Vec::with_capacity(candidates.len());
    let mut syntactic_scores = Vec::with_capacity(candidates.len());
    for candidate in candidates {
        let semantic = match cfg.semantic_window {
            Some(radius) => {
                semantic_score_windowed(text, word_index, candidate, &*backends.embedder, radius)?
            }
            None => semantic_score(text, word_index, candidate, &*backends.embedder)?,
        };
        semantic_scores.push(semantic);
        syntactic_scores.push(syntactic_score(
            text,
            word_index,
            candidate,
            &*backends.fluency,
        ));
    }
    let thresholds = compute_thresholds(&semantic_scores, &syntactic_scores, cfg)?;

    let original = text.word(word_index).to_lowercase();
    let mut purified = Vec::new();
    for (i, candidate) in candidates.iter().enumerate() {
        if semantic_scores[i] <= thresholds.effective_semantic
            || syntactic_scores[i] <= thresholds.effective_syntactic
        {
            continue;
        }
        let verdict = pos_compatible(text, word_index, candidate, &*backends.pos_tagger);
        if verdict == PosVerdict::Reject {
            continue;
        }
        purified.push(ScoredCandidate {
            text: candidate.clone(),
            semantic: semantic_scores[i],
            syntactic: syntactic_scores[i],
            verdict,
        });
    }
    purified.sort_by(|a, b| b.semantic.partial_cmp(&a.semantic).unwrap());
    // Inflection can collide with another candidate or recreate the
    // original word; drop those here rather than probing pointless texts.
    let mut seen = std::collections::HashSet::new();
    purified.retain(|c| {
        let surface = c.surface().to_lowercase();
        surface != original && seen.insert(surface)
    });
    Ok(purified)
}
