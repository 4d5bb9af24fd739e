//! Metric computation over per-sample outcomes.
//!
//! Denominators: original and after-attack accuracy are over all
//! non-errored samples; the attack success percentage is over originally
//! correct samples; perturbation and similarity average over successful
//! attacks only; query counts average over every attacked (non-skipped)
//! sample, failures included.

use serde::{Deserialize, Serialize};

use super::{OutcomeStatus, SampleOutcome};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub success: usize,
    pub failed: usize,
    pub skipped_misclassified: usize,
    pub budget_exhausted: usize,
    pub errored: usize,
}

/// Metrics of one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub samples: usize,
    /// Percent of samples the target classified correctly before attack.
    pub original_acc: f64,
    /// Percent still classified correctly after every sample was attacked.
    pub after_attack_acc: f64,
    pub avg_perturb_pct: f64,
    pub avg_queries: f64,
    pub avg_semantic_sim: f64,
    /// Successful attacks / originally correct samples, in [0, 1].
    pub asp: f64,
    pub counts: StatusCounts,
}

pub fn compute_metrics(rows: &[SampleOutcome]) -> RunMetrics {
    let mut counts = StatusCounts::default();
    for row in rows {
        match row.status {
            OutcomeStatus::Success => counts.success += 1,
            OutcomeStatus::Failed => counts.failed += 1,
            OutcomeStatus::SkippedMisclassified => counts.skipped_misclassified += 1,
            OutcomeStatus::BudgetExhausted => counts.budget_exhausted += 1,
            OutcomeStatus::Errored => counts.errored += 1,
        }
    }
    let scored = rows.len() - counts.errored;
    let originally_correct = scored - counts.skipped_misclassified;
    // A sample stays correct after attack iff it was originally correct
    // and the attack did not flip it.
    let still_correct = originally_correct - counts.success;

    let pct = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            100.0 * num as f64 / den as f64
        }
    };
    let mean_over = |values: Vec<f64>| {
        if values.is_empty() {
            0.0
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        }
    };

    let successes: Vec<&SampleOutcome> = rows
        .iter()
        .filter(|r| r.status == OutcomeStatus::Success)
        .collect();
    let attacked: Vec<&SampleOutcome> = rows
        .iter()
        .filter(|r| {
            !matches!(
                r.status,
                OutcomeStatus::SkippedMisclassified | OutcomeStatus::Errored
            )
        })
        .collect();

    RunMetrics {
        samples: rows.len(),
        original_acc: pct(originally_correct, scored),
        after_attack_acc: pct(still_correct, scored),
        avg_perturb_pct: mean_over(successes.iter().map(|r| r.perturbation_pct).collect()),
        avg_queries: mean_over(attacked.iter().map(|r| r.queries as f64).collect()),
        avg_semantic_sim: mean_over(successes.iter().map(|r| r.semantic_similarity).collect()),
        asp: if originally_correct == 0 {
            0.0
        } else {
            counts.success as f64 / originally_correct as f64
        },
        counts,
    }
}

/// Mean and sample standard deviation (n-1 denominator; 0 for a single
/// repetition).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
}

pub fn metric_summary(values: &[f64]) -> MetricSummary {
    if values.is_empty() {
        return MetricSummary { mean: 0.0, std: 0.0 };
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let std = if values.len() < 2 {
        0.0
    } else {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (values.len() - 1) as f64).sqrt()
    };
    MetricSummary { mean, std }
}

/// Per-repetition metrics plus mean/std summaries across repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub repetitions: Vec<RunMetrics>,
    pub original_acc: MetricSummary,
    pub after_attack_acc: MetricSummary,
    pub perturb_pct: MetricSummary,
    pub queries: MetricSummary,
    pub semantic_sim: MetricSummary,
    pub asp: MetricSummary,
}

pub fn summarize(per_repetition: &[RunMetrics]) -> RunReport {
    let collect = |f: fn(&RunMetrics) -> f64| -> Vec<f64> {
        per_repetition.iter().map(f).collect()
    };
    RunReport {
        repetitions: per_repetition.to_vec(),
        original_acc: metric_summary(&collect(|m| m.original_acc)),
        after_attack_acc: metric_summary(&collect(|m| m.after_attack_acc)),
        perturb_pct: metric_summary(&collect(|m| m.avg_perturb_pct)),
        queries: metric_summary(&collect(|m| m.avg_queries)),
        semantic_sim: metric_summary(&collect(|m| m.avg_semantic_sim)),
        asp: metric_summary(&collect(|m| m.asp)),
    }
}
