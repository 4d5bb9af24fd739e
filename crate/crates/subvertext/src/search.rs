//! Steps 4-5: local greedy search. Per round the attack ranks words,
//! probes each refined substitution alone (returning immediately on a
//! flip), then probes simultaneous assignments over the per-word top-N
//! lists in descending order of summed gaps. If nothing flips, the
//! best-gap sample becomes the new base and the round repeats.

use std::collections::BTreeMap;

use crate::backends::{BackendSuite, QueryMeter, TargetModel};
use crate::candidates::generate_candidates;
use crate::error::{Error, Result};
use crate::importance::{rank_word_importance, RankedImportance};
use crate::refinement::refine;
use crate::text::TokenizedText;
use crate::types::{
    perturbation_percentage, AttackConfig, AttackResult, AttackStatus, GapRecord, ImportanceRecord,
    Label, ScoredCandidate, Substitution,
};

/// Truth-label confidence of the base text minus the variant's. The base
/// confidence is measured once per round and passed in.
pub fn confidence_gap(
    target: &dyn TargetModel,
    meter: &QueryMeter,
    base_confidence: f64,
    variant: &TokenizedText,
    truth: &Label,
) -> Result<f64> {
    let prediction = meter.predict(target, variant)?;
    Ok(base_confidence - prediction.confidence(truth).unwrap_or(0.0))
}

/// What probing one word's purified candidates produced.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbeOutcome {
    /// A single substitution flipped the label; the attack is done.
    Flip(TokenizedText),
    /// The top-N positive-gap substitutions, descending by gap. May be
    /// empty when no candidate reduced the truth confidence.
    Tops(Vec<GapRecord>),
}

/// Substitute each purified candidate alone into the base text and query
/// the target, exiting early on any label flip.
#[allow(clippy::too_many_arguments)]
pub fn probe_candidates(
    base: &TokenizedText,
    base_confidence: f64,
    word_index: usize,
    purified: &[ScoredCandidate],
    truth: &Label,
    top_n: usize,
    target: &dyn TargetModel,
    meter: &QueryMeter,
) -> Result<ProbeOutcome> {
    let mut gaps = Vec::new();
    for candidate in purified {
        let variant = base.with_word(word_index, candidate.surface());
        let prediction = meter.predict(target, &variant)?;
        if prediction.predicted != *truth {
            return Ok(ProbeOutcome::Flip(variant));
        }
        let gap = base_confidence - prediction.confidence(truth).unwrap_or(0.0);
        if gap > 0.0 {
            gaps.push(GapRecord::single(word_index, candidate.surface(), gap));
        }
    }
    gaps.sort_by(|a, b| b.gap.partial_cmp(&a.gap).unwrap());
    gaps.truncate(top_n);
    Ok(ProbeOutcome::Tops(gaps))
}

/// One planned simultaneous substitution, ordered by the sum of its
/// members' measured single gaps so promising combinations are probed
/// first.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateAssignment {
    /// word index -> surface form
    pub substitutions: BTreeMap<usize, String>,
    pub gap_sum: f64,
}

/// Cartesian product over the non-empty per-word top lists, at most N^M
/// assignments, descending by summed gap.
pub fn enumerate_products(
    per_word_tops: &BTreeMap<usize, Vec<GapRecord>>,
) -> Result<Vec<CandidateAssignment>> {
    let lists: Vec<&Vec<GapRecord>> =
        per_word_tops.values().filter(|v| !v.is_empty()).collect();
    if lists.is_empty() {
        return Err(Error::EmptySearchSpace);
    }
    let mut assignments = vec![CandidateAssignment {
        substitutions: BTreeMap::new(),
        gap_sum: 0.0,
    }];
    for list in lists {
        let mut extended = Vec::with_capacity(assignments.len() * list.len());
        for assignment in &assignments {
            for record in list {
                let mut substitutions = assignment.substitutions.clone();
                for (index, surface) in &record.assignment {
                    substitutions.insert(*index, surface.clone());
                }
                extended.push(CandidateAssignment {
                    substitutions,
                    gap_sum: assignment.gap_sum + record.gap,
                });
            }
        }
        assignments = extended;
    }
    assignments.sort_by(|a, b| b.gap_sum.partial_cmp(&a.gap_sum).unwrap());
    Ok(assignments)
}

/// Run the full attack pipeline against one sample.
pub fn attack(
    sample: &TokenizedText,
    truth: &Label,
    cfg: &AttackConfig,
    backends: &BackendSuite,
) -> Result<AttackResult> {
    cfg.validate()?;
    let mut run = SearchState::new(sample, truth, cfg, backends);
    match run.drive() {
        Ok(result) => Ok(result),
        Err(Error::BudgetExhausted(_)) => run.finalize_exhausted(),
        Err(e) => Err(e),
    }
}

/// Round bookkeeping for one attack. Confined to its attack; never shared.
struct SearchState<'a> {
    original: &'a TokenizedText,
    truth: &'a Label,
    cfg: &'a AttackConfig,
    backends: &'a BackendSuite,
    meter: QueryMeter,
    /// Current base text (the original, then each adopted best-gap sample).
    base: TokenizedText,
    round: usize,
    /// Best (gap, variant) observed in the current round.
    best_gap_sample: Option<(f64, TokenizedText)>,
    cached_ranking: Option<Vec<ImportanceRecord>>,
}

impl<'a> SearchState<'a> {
    fn new(
        sample: &'a TokenizedText,
        truth: &'a Label,
        cfg: &'a AttackConfig,
        backends: &'a BackendSuite,
    ) -> Self {
        SearchState {
            original: sample,
            truth,
            cfg,
            backends,
            meter: QueryMeter::new(cfg.query_budget),
            base: sample.clone(),
            round: 0,
            best_gap_sample: None,
            cached_ranking: None,
        }
    }

    fn drive(&mut self) -> Result<AttackResult> {
        let target = &*self.backends.target;
        let initial = self.meter.predict(target, self.original)?;
        if initial.confidence(self.truth).is_none() {
            return Err(Error::InvalidLabel(format!(
                "truth label {} out of range for {} classes",
                self.truth.id,
                initial.num_classes()
            )));
        }
        if initial.predicted != *self.truth {
            return self.finalize(AttackStatus::SkippedMisclassified, self.original.clone());
        }

        for round in 1..=self.cfg.max_rounds {
            self.round = round;
            self.best_gap_sample = None;
            let ranked = self.rank(round)?;
            let base_confidence = ranked.baseline.confidence(self.truth).unwrap_or(0.0);

            // Collect up to M contributing words; words with no candidates,
            // an empty purified set, or no positive gap are skipped and the
            // next-ranked word is promoted.
            let mut per_word_tops: BTreeMap<usize, Vec<GapRecord>> = BTreeMap::new();
            for record in &ranked.records {
                if per_word_tops.len() >= self.cfg.m {
                    break;
                }
                let raw = generate_candidates(
                    &self.base,
                    record.word_index,
                    self.cfg,
                    &*self.backends.masked_lm,
                );
                if raw.is_empty() {
                    continue;
                }
                let purified =
                    refine(&self.base, record.word_index, &raw, self.cfg, self.backends)?;
                if purified.is_empty() {
                    continue;
                }
                match probe_candidates(
                    &self.base,
                    base_confidence,
                    record.word_index,
                    &purified,
                    self.truth,
                    self.cfg.n,
                    target,
                    &self.meter,
                )? {
                    ProbeOutcome::Flip(text) => {
                        return self.finalize(AttackStatus::Success, text)
                    }
                    ProbeOutcome::Tops(tops) => {
                        if let Some(best) = tops.first() {
                            let surface = best.assignment[&record.word_index].clone();
                            let text = self.base.with_word(record.word_index, &surface);
                            self.observe(best.gap, text);
                            per_word_tops.insert(record.word_index, tops);
                        }
                    }
                }
            }

            if per_word_tops.is_empty() {
                return self.finalize(AttackStatus::Failed, self.base.clone());
            }

            // Combination stage. A single contributing word has already had
            // each of its candidates probed alone, so products only make
            // sense over two or more words.
            if per_word_tops.len() >= 2 {
                for assignment in enumerate_products(&per_word_tops)? {
                    let variant = self.base.with_words(
                        assignment
                            .substitutions
                            .iter()
                            .map(|(index, surface)| (*index, surface.as_str())),
                    );
                    let prediction = self.meter.predict(target, &variant)?;
                    if prediction.predicted != *self.truth {
                        return self.finalize(AttackStatus::Success, variant);
                    }
                    let gap =
                        base_confidence - prediction.confidence(self.truth).unwrap_or(0.0);
                    self.observe(gap, variant);
                }
            }

            match self.best_gap_sample.take() {
                Some((_, best)) => self.base = best,
                None => break,
            }
        }
        self.finalize(AttackStatus::Failed, self.base.clone())
    }

    fn rank(&mut self, round: usize) -> Result<RankedImportance> {
        let target = &*self.backends.target;
        if self.cfg.reuse_importance && round > 1 {
            if let Some(records) = &self.cached_ranking {
                let baseline = self.meter.predict(target, &self.base)?;
                return Ok(RankedImportance {
                    baseline,
                    records: records.clone(),
                });
            }
        }
        let ranked = rank_word_importance(
            &self.base,
            self.truth,
            target,
            &self.meter,
            self.cfg.exclude_stopwords,
        )?;
        if self.cfg.reuse_importance {
            self.cached_ranking = Some(ranked.records.clone());
        }
        Ok(ranked)
    }

    fn observe(&mut self, gap: f64, text: TokenizedText) {
        let better = match &self.best_gap_sample {
            Some((best, _)) => gap > *best,
            None => true,
        };
        if better {
            self.best_gap_sample = Some((gap, text));
        }
    }

    fn finalize_exhausted(&mut self) -> Result<AttackResult> {
        let text = match self.best_gap_sample.take() {
            Some((_, text)) => text,
            None => self.base.clone(),
        };
        self.finalize(AttackStatus::BudgetExhausted, text)
    }

    fn finalize(&self, status: AttackStatus, adversarial: TokenizedText) -> Result<AttackResult> {
        let substitutions = diff_substitutions(self.original, &adversarial);
        let perturbation_pct = perturbation_percentage(self.original, &substitutions);
        let semantic_similarity = if substitutions.is_empty() {
            1.0
        } else {
            full_text_similarity(self.original, &adversarial, self.backends)?
        };
        Ok(AttackResult {
            status,
            adversarial,
            substitutions,
            queries: self.meter.count(),
            semantic_similarity,
            perturbation_pct,
            rounds: self.round,
        })
    }
}

/// Word-level differences between the original sample and the final text.
fn diff_substitutions(original: &TokenizedText, adversarial: &TokenizedText) -> Vec<Substitution> {
    (0..original.len().min(adversarial.len()))
        .filter(|&i| original.word(i) != adversarial.word(i))
        .map(|i| Substitution {
            index: i,
            original: original.word(i).to_string(),
            replacement: adversarial.word(i).to_string(),
        })
        .collect()
}

/// Full-text embedding similarity between the original and final text.
fn full_text_similarity(
    original: &TokenizedText,
    adversarial: &TokenizedText,
    backends: &BackendSuite,
) -> Result<f64> {
    // Reuse the per-candidate scorer by treating the final text as a
    // zero-substitution variant of itself: embed both full renderings.
    let a = backends.embedder.embed(&original.detokenize());
    let b = backends.embedder.embed(&adversarial.detokenize());
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(dot / (na * nb))
}
