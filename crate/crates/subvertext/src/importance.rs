//! Step 1: rank words by the truth-label confidence drop caused by
//! masking each one.

use crate::backends::{QueryMeter, TargetModel};
use crate::error::{Error, Result};
use crate::text::{TokenizedText, MASK_SYMBOL};
use crate::types::{ImportanceRecord, Label, Prediction};

/// Importance ranking plus the unmasked baseline it was measured against.
/// The baseline doubles as the round's cached base confidence for gap
/// computations, so the base text is queried once per round.
#[derive(Debug, Clone)]
pub struct RankedImportance {
    pub baseline: Prediction,
    /// One record per attackable word, descending by delta; ties keep the
    /// lower word index first. Negative deltas stay in, at the tail.
    pub records: Vec<ImportanceRecord>,
}

/// Mask each attackable word in turn and record the confidence drop.
/// Costs exactly 1 + number-of-attackable-words queries.
pub fn rank_word_importance(
    text: &TokenizedText,
    truth: &Label,
    target: &dyn TargetModel,
    meter: &QueryMeter,
    exclude_stopwords: bool,
) -> Result<RankedImportance> {
    let baseline = meter.predict(target, text)?;
    let full = baseline.confidence(truth).ok_or_else(|| {
        Error::InvalidLabel(format!(
            "truth label {} out of range for {} classes",
            truth.id,
            baseline.num_classes()
        ))
    })?;
    let mut records = Vec::new();
    for index in text.attackable_indices(exclude_stopwords) {
        let masked = text.with_word_raw(index, MASK_SYMBOL);
        let prediction = meter.predict(target, &masked)?;
        let dropped = prediction.confidence(truth).unwrap_or(0.0);
        records.push(ImportanceRecord {
            word_index: index,
            delta: full - dropped,
        });
    }
    records.sort_by(|a, b| b.delta.partial_cmp(&a.delta).unwrap());
    Ok(RankedImportance { baseline, records })
}
