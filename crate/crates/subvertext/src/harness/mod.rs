//! Batch attack execution: dataset ingestion, seeded subsampling across
//! repetitions, worker fan-out, metric aggregation, sweeps, run
//! persistence, and adversarial-example export.

pub mod dataset;
pub mod metrics;
pub mod report;

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::backends::{BackendSuite, TargetModel};
use crate::error::{Error, Result};
use crate::search::attack;
use crate::text::{tokenize, TokenizedText};
use crate::types::{AttackConfig, AttackStatus, Heuristic, Label, Substitution};

pub use dataset::{load_dataset, DatasetFormat, DatasetRecord, DatasetSchema, PairField, SamplePayload};
pub use metrics::{compute_metrics, summarize, MetricSummary, RunMetrics, RunReport, StatusCounts};

/// Harness-level status of one attacked sample. Extends the attack
/// statuses with an errored bucket for backend failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeStatus {
    Success,
    Failed,
    SkippedMisclassified,
    BudgetExhausted,
    Errored,
}

impl From<AttackStatus> for OutcomeStatus {
    fn from(status: AttackStatus) -> Self {
        match status {
            AttackStatus::Success => OutcomeStatus::Success,
            AttackStatus::Failed => OutcomeStatus::Failed,
            AttackStatus::SkippedMisclassified => OutcomeStatus::SkippedMisclassified,
            AttackStatus::BudgetExhausted => OutcomeStatus::BudgetExhausted,
        }
    }
}

/// One results-file row: everything needed to recompute every metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub repetition: usize,
    pub id: String,
    pub status: OutcomeStatus,
    pub label: usize,
    pub original: String,
    pub adversarial: String,
    pub substitutions: Vec<Substitution>,
    pub queries: u64,
    pub perturbation_pct: f64,
    pub semantic_similarity: f64,
    pub rounds: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Run-shaping parameters, separate from the attack hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunParams {
    /// Samples drawn per repetition; `None` attacks the whole dataset.
    pub sample_size: Option<usize>,
    pub seed: u64,
    pub repetitions: usize,
    pub workers: usize,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            sample_size: None,
            seed: 0,
            repetitions: 1,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<SampleOutcome>,
    pub per_repetition: Vec<RunMetrics>,
    pub report: RunReport,
}

/// Target adapter for NLI pairs: the attacked field is live text, the
/// companion is glued on in task order before every prediction, so the
/// target always sees the full pair.
struct PairedTarget {
    base: Arc<dyn TargetModel>,
    companion: String,
    attacked: PairField,
}

impl TargetModel for PairedTarget {
    fn predict(&self, text: &TokenizedText) -> Result<crate::types::Prediction> {
        let rendered = text.detokenize();
        let composite = match self.attacked {
            PairField::Premise => format!("{rendered} {}", self.companion),
            PairField::Hypothesis => format!("{} {rendered}", self.companion),
        };
        self.base.predict(&tokenize(&composite)?)
    }

    fn reentrant(&self) -> bool {
        self.base.reentrant()
    }
}

/// Seeded sample without replacement: a partial Fisher-Yates pass over the
/// index range.
fn subsample(len: usize, size: usize, rng: &mut StdRng) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..len).collect();
    let take = size.min(len);
    for slot in 0..take {
        let pick = rng.random_range(slot..len);
        indices.swap(slot, pick);
    }
    indices.truncate(take);
    indices
}

fn attack_record(
    record: &DatasetRecord,
    repetition: usize,
    cfg: &AttackConfig,
    backends: &BackendSuite,
) -> SampleOutcome {
    let attacked_raw = record.payload.attacked_text();
    let suite = match &record.payload {
        SamplePayload::Text(_) => backends.clone(),
        SamplePayload::Pair {
            premise,
            hypothesis,
            attacked,
        } => {
            let companion = match attacked {
                PairField::Premise => hypothesis.clone(),
                PairField::Hypothesis => premise.clone(),
            };
            backends.with_target(Arc::new(PairedTarget {
                base: Arc::clone(&backends.target),
                companion,
                attacked: *attacked,
            }))
        }
    };
    let truth = Label::new(record.label.id);
    let outcome = tokenize(attacked_raw)
        .and_then(|sample| attack(&sample, &truth, cfg, &suite).map(|r| (sample, r)));
    match outcome {
        Ok((sample, result)) => SampleOutcome {
            repetition,
            id: record.id.clone(),
            status: result.status.into(),
            label: record.label.id,
            original: sample.detokenize(),
            adversarial: result.adversarial.detokenize(),
            substitutions: result.substitutions,
            queries: result.queries,
            perturbation_pct: result.perturbation_pct,
            semantic_similarity: result.semantic_similarity,
            rounds: result.rounds,
            error: None,
        },
        Err(e) => SampleOutcome {
            repetition,
            id: record.id.clone(),
            status: OutcomeStatus::Errored,
            label: record.label.id,
            original: attacked_raw.to_string(),
            adversarial: attacked_raw.to_string(),
            substitutions: Vec::new(),
            queries: 0,
            perturbation_pct: 0.0,
            semantic_similarity: 0.0,
            rounds: 0,
            error: Some(e.to_string()),
        },
    }
}

/// Attack a seeded subsample of the dataset once per repetition and
/// aggregate the metrics. Subsampling depends only on (seed, repetition),
/// so sweeps with a shared seed attack identical sample sets.
pub fn run_attacks(
    dataset: &[DatasetRecord],
    cfg: &AttackConfig,
    backends: &BackendSuite,
    params: &RunParams,
) -> Result<RunOutput> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidConfig("dataset is empty".into()));
    }
    if let Some(size) = params.sample_size {
        if size == 0 {
            return Err(Error::InvalidConfig("sample_size must be >= 1".into()));
        }
        if size > dataset.len() {
            return Err(Error::InvalidConfig(format!(
                "sample_size {size} exceeds dataset size {}",
                dataset.len()
            )));
        }
    }
    if params.repetitions == 0 {
        return Err(Error::InvalidConfig("repetitions must be >= 1".into()));
    }
    // Non-reentrant backends get a single worker; that is the harness's
    // serialization guarantee.
    let workers = if backends.all_reentrant() {
        params.workers.max(1)
    } else {
        1
    };

    let mut rows = Vec::new();
    let mut per_repetition = Vec::new();
    for repetition in 0..params.repetitions {
        let picked: Vec<usize> = match params.sample_size {
            Some(size) => {
                let mut rng = StdRng::seed_from_u64(params.seed.wrapping_add(repetition as u64));
                subsample(dataset.len(), size, &mut rng)
            }
            None => (0..dataset.len()).collect(),
        };
        let mut repetition_rows: Vec<Option<SampleOutcome>> = vec![None; picked.len()];
        if workers <= 1 {
            for (slot, &index) in picked.iter().enumerate() {
                repetition_rows[slot] =
                    Some(attack_record(&dataset[index], repetition, cfg, backends));
            }
        } else {
            std::thread::scope(|scope| {
                let chunks: Vec<(usize, &[usize])> = picked
                    .chunks(picked.len().div_ceil(workers))
                    .enumerate()
                    .map(|(i, c)| (i * picked.len().div_ceil(workers), c))
                    .collect();
                let mut handles = Vec::new();
                for (offset, chunk) in chunks {
                    handles.push((offset, scope.spawn(move || {
                        chunk
                            .iter()
                            .map(|&index| attack_record(&dataset[index], repetition, cfg, backends))
                            .collect::<Vec<_>>()
                    })));
                }
                for (offset, handle) in handles {
                    for (i, outcome) in handle.join().expect("worker panicked").into_iter().enumerate() {
                        repetition_rows[offset + i] = Some(outcome);
                    }
                }
            });
        }
        let repetition_rows: Vec<SampleOutcome> =
            repetition_rows.into_iter().map(|r| r.unwrap()).collect();
        per_repetition.push(compute_metrics(&repetition_rows));
        rows.extend(repetition_rows);
    }
    let report = summarize(&per_repetition);
    Ok(RunOutput {
        rows,
        per_repetition,
        report,
    })
}

/// Hyperparameter axis a sweep walks over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    K,
    Window,
    M,
    N,
    Lambda,
    Heuristic,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "k" => Ok(SweepAxis::K),
            "window" => Ok(SweepAxis::Window),
            "m" => Ok(SweepAxis::M),
            "n" => Ok(SweepAxis::N),
            "lambda" => Ok(SweepAxis::Lambda),
            "heuristic" => Ok(SweepAxis::Heuristic),
            other => Err(Error::InvalidConfig(format!(
                "unknown sweep axis '{other}' (expected k, window, m, n, lambda, or heuristic)"
            ))),
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            SweepAxis::K => "k",
            SweepAxis::Window => "window",
            SweepAxis::M => "m",
            SweepAxis::N => "n",
            SweepAxis::Lambda => "lambda",
            SweepAxis::Heuristic => "heuristic",
        };
        f.write_str(name)
    }
}

/// Apply one axis value to a config, parsing it for the axis's type.
pub fn apply_axis(cfg: &AttackConfig, axis: SweepAxis, value: &str) -> Result<AttackConfig> {
    let mut out = cfg.clone();
    let parse_usize = |value: &str| -> Result<usize> {
        value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("'{value}' is not a valid {axis} value")))
    };
    match axis {
        SweepAxis::K => out.k = parse_usize(value)?,
        SweepAxis::Window => out.window_half = parse_usize(value)?,
        SweepAxis::M => out.m = parse_usize(value)?,
        SweepAxis::N => out.n = parse_usize(value)?,
        SweepAxis::Lambda => {
            out.lambda = value.trim().parse().map_err(|_| {
                Error::InvalidConfig(format!("'{value}' is not a valid lambda value"))
            })?
        }
        SweepAxis::Heuristic => out.heuristic = value.trim().parse::<Heuristic>()?,
    }
    out.validate()?;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: String,
    pub output: RunOutput,
}

/// Run one full attack batch per axis value with identical seeds, so the
/// per-value metrics are paired comparisons.
pub fn sweep(
    dataset: &[DatasetRecord],
    base_cfg: &AttackConfig,
    axis: SweepAxis,
    values: &[String],
    backends: &BackendSuite,
    params: &RunParams,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one value".into()));
    }
    let mut out = Vec::with_capacity(values.len());
    for value in values {
        let cfg = apply_axis(base_cfg, axis, value)?;
        let output = run_attacks(dataset, &cfg, backends, params)?;
        out.push(SweepRow {
            value: value.clone(),
            output,
        });
    }
    Ok(out)
}

/// Write successful attacks as an augmentation JSONL file:
/// `{original, adversarial, label, substitutions}` per line, truth label
/// preserved. Returns the number of exported records.
pub fn export_adversarial(rows: &[SampleOutcome], path: &Path) -> Result<usize> {
    #[derive(Serialize)]
    struct ExportRow<'a> {
        original: &'a str,
        adversarial: &'a str,
        label: usize,
        substitutions: &'a [Substitution],
    }
    let mut file = std::fs::File::create(path)?;
    let mut count = 0;
    for row in rows {
        if row.status != OutcomeStatus::Success {
            continue;
        }
        let line = serde_json::to_string(&ExportRow {
            original: &row.original,
            adversarial: &row.adversarial,
            label: row.label,
            substitutions: &row.substitutions,
        })?;
        writeln!(file, "{line}")?;
        count += 1;
    }
    Ok(count)
}

/// Write the standard run directory: config snapshot, per-sample rows,
/// metrics, and the report table as text and CSV. Nothing in these files
/// depends on wall-clock time, so identical runs are byte-identical.
pub fn persist_run(
    dir: &Path,
    effective_config: &serde_json::Value,
    output: &RunOutput,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(
        dir.join("config.json"),
        format!("{}\n", serde_json::to_string_pretty(effective_config)?),
    )?;
    let mut results = std::fs::File::create(dir.join("results.jsonl"))?;
    for row in &output.rows {
        writeln!(results, "{}", serde_json::to_string(row)?)?;
    }
    std::fs::write(
        dir.join("metrics.json"),
        format!("{}\n", serde_json::to_string_pretty(&output.report)?),
    )?;
    std::fs::write(dir.join("report.txt"), report::render_metrics_table(&output.report))?;
    std::fs::write(dir.join("report.csv"), report::render_metrics_csv(&output.report))?;
    Ok(())
}

/// Sample ids attacked in one repetition, for pairing checks and tests.
pub fn sampled_ids(rows: &[SampleOutcome], repetition: usize) -> BTreeSet<String> {
    rows.iter()
        .filter(|r| r.repetition == repetition)
        .map(|r| r.id.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::stub::demo_suite;

    fn toy_dataset(n: usize) -> Vec<DatasetRecord> {
        (0..n)
            .map(|i| DatasetRecord {
                id: format!("s{i}"),
                payload: SamplePayload::Text(format!(
                    "the staff was {} here today",
                    if i % 2 == 0 { "great" } else { "terrible" }
                )),
                label: Label::new(if i % 2 == 0 { 1 } else { 0 }),
            })
            .collect()
    }

    #[test]
    fn subsampling_is_seeded_and_stable() {
        let mut rng_a = StdRng::seed_from_u64(7);
        let mut rng_b = StdRng::seed_from_u64(7);
        assert_eq!(subsample(50, 10, &mut rng_a), subsample(50, 10, &mut rng_b));
        let mut rng_c = StdRng::seed_from_u64(8);
        assert_ne!(subsample(50, 10, &mut rng_a), subsample(50, 10, &mut rng_c));
    }

    #[test]
    fn subsample_draws_distinct_indices() {
        let mut rng = StdRng::seed_from_u64(3);
        let picked = subsample(20, 20, &mut rng);
        let distinct: BTreeSet<usize> = picked.iter().copied().collect();
        assert_eq!(distinct.len(), 20);
    }

    #[test]
    fn run_validates_sample_size() {
        let suite = demo_suite();
        let dataset = toy_dataset(3);
        let params = RunParams {
            sample_size: Some(9),
            ..RunParams::default()
        };
        assert!(run_attacks(&dataset, &AttackConfig::default(), &suite, &params).is_err());
    }

    #[test]
    fn metrics_recompute_exactly_from_the_rows() {
        let suite = demo_suite();
        let dataset = toy_dataset(5);
        let params = RunParams {
            repetitions: 2,
            ..RunParams::default()
        };
        let output = run_attacks(&dataset, &AttackConfig::default(), &suite, &params).unwrap();
        for (repetition, stored) in output.per_repetition.iter().enumerate() {
            let rows: Vec<SampleOutcome> = output
                .rows
                .iter()
                .filter(|r| r.repetition == repetition)
                .cloned()
                .collect();
            assert_eq!(&compute_metrics(&rows), stored);
        }
    }

    #[test]
    fn workers_produce_the_same_rows_as_serial() {
        let suite = demo_suite();
        let dataset = toy_dataset(6);
        let cfg = AttackConfig::default();
        let serial = run_attacks(&dataset, &cfg, &suite, &RunParams::default()).unwrap();
        let parallel = run_attacks(
            &dataset,
            &cfg,
            &suite,
            &RunParams {
                workers: 3,
                ..RunParams::default()
            },
        )
        .unwrap();
        assert_eq!(serial.rows, parallel.rows);
    }

    #[test]
    fn paired_target_composes_in_task_order() {
        use crate::backends::stub::TableTarget;
        let base = TableTarget::new(vec![0.5, 0.5]).with_entry("a premise b hypo", vec![0.2, 0.8]);
        let paired = PairedTarget {
            base: Arc::new(base),
            companion: "b hypo".into(),
            attacked: PairField::Premise,
        };
        let prediction = paired.predict(&tokenize("a premise").unwrap()).unwrap();
        assert_eq!(prediction.scores, vec![0.2, 0.8]);
    }

    #[test]
    fn export_writes_only_successes() {
        let suite = demo_suite();
        let dataset = toy_dataset(4);
        let output =
            run_attacks(&dataset, &AttackConfig::default(), &suite, &RunParams::default())
                .unwrap();
        let path = std::env::temp_dir().join(format!(
            "subvertext-export-{}.jsonl",
            std::process::id()
        ));
        let exported = export_adversarial(&output.rows, &path).unwrap();
        let successes = output
            .rows
            .iter()
            .filter(|r| r.status == OutcomeStatus::Success)
            .count();
        assert!(successes >= 1);
        assert_eq!(exported, successes);
        let content = std::fs::read_to_string(&path).unwrap();
        assert_eq!(content.lines().count(), exported);
        for line in content.lines() {
            let row: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(row["label"].is_u64());
            assert_ne!(row["original"], row["adversarial"]);
        }
        // zero successes still produce a valid, empty file
        let empty_path = std::env::temp_dir().join(format!(
            "subvertext-export-empty-{}.jsonl",
            std::process::id()
        ));
        assert_eq!(export_adversarial(&[], &empty_path).unwrap(), 0);
        assert_eq!(std::fs::read_to_string(&empty_path).unwrap(), "");
        let _ = std::fs::remove_file(path);
        let _ = std::fs::remove_file(empty_path);
    }

    #[test]
    fn nli_pairs_attack_the_chosen_field_end_to_end() {
        // The stub scores the glued pair, so the hypothesis word "great"
        // matters even while only the premise is perturbed.
        let suite = demo_suite();
        let dataset = vec![DatasetRecord {
            id: "pair0".into(),
            payload: SamplePayload::Pair {
                premise: "the staff was great here today".into(),
                hypothesis: "the visit was awesome".into(),
                attacked: PairField::Premise,
            },
            label: Label::new(1),
        }];
        let output =
            run_attacks(&dataset, &AttackConfig::default(), &suite, &RunParams::default())
                .unwrap();
        let row = &output.rows[0];
        assert_eq!(row.status, OutcomeStatus::Success, "row: {row:?}");
        // only the premise was rewritten
        assert_eq!(row.original, "the staff was great here today");
        assert!(row.adversarial.contains("terrible"), "row: {row:?}");
    }

    #[test]
    fn axis_values_parse_per_axis() {
        let cfg = AttackConfig::default();
        assert_eq!(apply_axis(&cfg, SweepAxis::K, "35").unwrap().k, 35);
        assert_eq!(
            apply_axis(&cfg, SweepAxis::Heuristic, "median").unwrap().heuristic,
            Heuristic::Median
        );
        assert!(apply_axis(&cfg, SweepAxis::M, "9").is_err());
        assert!(apply_axis(&cfg, SweepAxis::Lambda, "abc").is_err());
    }
}
