//! Command-line driver: batch attacks, hyperparameter sweeps, and
//! one-off attacks against the built-in stub suite or a remote endpoint.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use subvertext::backends::remote::RemoteTarget;
use subvertext::backends::stub::demo_suite;
use subvertext::backends::BackendSuite;
use subvertext::harness::{
    self, load_dataset, report, DatasetFormat, DatasetSchema, PairField, RunParams,
    SampleOutcome, SweepAxis,
};
use subvertext::types::Label;
use subvertext::{attack, tokenize, AttackConfig};

#[derive(Parser)]
#[command(
    name = "subvertext",
    version,
    about = "Black-box word-substitution attacks on text classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Attack a dataset and write a run directory
    Attack(AttackArgs),
    /// Run one attack batch per value of a hyperparameter axis
    Sweep(SweepArgs),
    /// Attack one sentence and print the before/after diff
    Single(SingleArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON file whose keys mirror the attack hyperparameter names
    #[arg(long)]
    config: Option<PathBuf>,
    /// Hard cap on target-model queries per attack
    #[arg(long)]
    query_budget: Option<u64>,
    /// Cap on replacement rounds per attack
    #[arg(long)]
    max_rounds: Option<usize>,
}

#[derive(Args)]
struct BackendArgs {
    /// Backend suite: "stub" (built-in deterministic suite) or "remote"
    #[arg(long, default_value = "stub")]
    backend_suite: String,
    /// Remote prediction endpoint URL; replaces the suite's target model
    #[arg(long)]
    target_url: Option<String>,
}

#[derive(Args)]
struct DatasetArgs {
    /// Dataset file to attack
    #[arg(long)]
    dataset: PathBuf,
    /// Dataset format: jsonl or csv
    #[arg(long, default_value = "jsonl")]
    format: String,
    /// Pair field to perturb for premise/hypothesis rows
    #[arg(long, default_value = "hypothesis")]
    attack_field: String,
    /// Skip malformed rows (reported with line numbers) instead of failing
    #[arg(long)]
    lenient: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Samples drawn per repetition (default: the whole dataset)
    #[arg(long)]
    sample_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    repetitions: usize,
    /// Attack worker threads (forced to 1 for non-reentrant backends)
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct AttackArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    dataset: DatasetArgs,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    backends: BackendArgs,
    /// Also export successful attacks as augmentation JSONL
    #[arg(long)]
    export: Option<PathBuf>,
    /// Run directory to create
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    dataset: DatasetArgs,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    backends: BackendArgs,
    /// Axis to vary: k, window, m, n, lambda, or heuristic
    #[arg(long)]
    axis: String,
    /// Comma-separated axis values, e.g. 10,20,35,50,60
    #[arg(long)]
    values: String,
    /// Output directory (one sub-run per value plus a comparison table)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SingleArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    backends: BackendArgs,
    /// Sentence to attack
    #[arg(long)]
    text: String,
    /// Truth label index
    #[arg(long)]
    label: usize,
}

fn load_config(args: &ConfigArgs) -> Result<AttackConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let content = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            serde_json::from_str::<AttackConfig>(&content)
                .with_context(|| format!("bad config {}", path.display()))?
        }
        None => AttackConfig::default(),
    };
    if let Some(budget) = args.query_budget {
        cfg.query_budget = Some(budget);
    }
    if let Some(rounds) = args.max_rounds {
        cfg.max_rounds = rounds;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn build_suite(args: &BackendArgs) -> Result<(BackendSuite, String)> {
    let mut suite = match args.backend_suite.as_str() {
        "stub" | "remote" => demo_suite(),
        other => bail!("unknown backend suite '{other}' (available: stub, remote)"),
    };
    let wants_remote = args.backend_suite == "remote" || args.target_url.is_some();
    let description = if wants_remote {
        let target = RemoteTarget::from_env(args.target_url.clone())?;
        let description = format!(
            "remote:{}",
            args.target_url.as_deref().unwrap_or("(from environment)")
        );
        suite = suite.with_target(Arc::new(target));
        description
    } else {
        args.backend_suite.clone()
    };
    Ok((suite, description))
}

fn load_records(
    args: &DatasetArgs,
) -> Result<(Vec<harness::DatasetRecord>, DatasetFormat, PairField)> {
    let format: DatasetFormat = args.format.parse()?;
    let attack_field: PairField = args.attack_field.parse()?;
    let schema = DatasetSchema {
        attack_field,
        ..DatasetSchema::default()
    };
    if !args.dataset.exists() {
        bail!("dataset {} does not exist", args.dataset.display());
    }
    let (records, warnings) = load_dataset(&args.dataset, format, &schema, args.lenient)?;
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }
    Ok((records, format, attack_field))
}

fn snapshot(
    cfg: &AttackConfig,
    params: &RunParams,
    dataset: Option<(&Path, DatasetFormat, PairField)>,
    backend: &str,
) -> serde_json::Value {
    let mut snapshot = serde_json::json!({
        "attack": cfg,
        "run": params,
        "backend_suite": backend,
    });
    if let Some((path, format, attack_field)) = dataset {
        snapshot["dataset"] = serde_json::json!({
            "path": path.display().to_string(),
            "format": format,
            "attack_field": attack_field,
        });
    }
    snapshot
}

fn cmd_attack(args: AttackArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let (records, format, attack_field) = load_records(&args.dataset)?;
    let (suite, backend_description) = build_suite(&args.backends)?;
    let params = RunParams {
        sample_size: args.run.sample_size,
        seed: args.run.seed,
        repetitions: args.run.repetitions,
        workers: args.run.workers,
    };
    let output = harness::run_attacks(&records, &cfg, &suite, &params)?;
    let effective = snapshot(
        &cfg,
        &params,
        Some((args.dataset.dataset.as_path(), format, attack_field)),
        &backend_description,
    );
    harness::persist_run(&args.out, &effective, &output)?;
    if let Some(export_path) = &args.export {
        let exported = harness::export_adversarial(&output.rows, export_path)?;
        println!(
            "exported {exported} adversarial examples to {}",
            export_path.display()
        );
    }
    print!("{}", report::render_metrics_table(&output.report));
    println!("run directory: {}", args.out.display());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let axis: SweepAxis = args.axis.parse()?;
    let values: Vec<String> = args
        .values
        .split(',')
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect();
    if values.is_empty() {
        bail!("--values is empty");
    }
    // Validate every value before any run starts.
    for value in &values {
        harness::apply_axis(&cfg, axis, value)?;
    }
    let (records, format, attack_field) = load_records(&args.dataset)?;
    let (suite, backend_description) = build_suite(&args.backends)?;
    let params = RunParams {
        sample_size: args.run.sample_size,
        seed: args.run.seed,
        repetitions: args.run.repetitions,
        workers: args.run.workers,
    };
    let rows = harness::sweep(&records, &cfg, axis, &values, &suite, &params)?;
    std::fs::create_dir_all(&args.out)?;
    for row in &rows {
        let sub_cfg = harness::apply_axis(&cfg, axis, &row.value)?;
        let effective = snapshot(
            &sub_cfg,
            &params,
            Some((args.dataset.dataset.as_path(), format, attack_field)),
            &backend_description,
        );
        harness::persist_run(
            &args.out.join(format!("{axis}-{}", row.value)),
            &effective,
            &row.output,
        )?;
    }
    let table = report::render_sweep_table(&axis.to_string(), &rows);
    std::fs::write(args.out.join("comparison.txt"), &table)?;
    std::fs::write(
        args.out.join("comparison.csv"),
        report::render_sweep_csv(&axis.to_string(), &rows),
    )?;
    print!("{table}");
    println!("sweep directory: {}", args.out.display());
    Ok(())
}

fn cmd_single(args: SingleArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let (suite, _) = build_suite(&args.backends)?;
    let sample = tokenize(&args.text)?;
    let truth = Label::new(args.label);
    let result = attack(&sample, &truth, &cfg, &suite)?;
    let row = SampleOutcome {
        repetition: 0,
        id: "single".into(),
        status: result.status.into(),
        label: args.label,
        original: sample.detokenize(),
        adversarial: result.adversarial.detokenize(),
        substitutions: result.substitutions,
        queries: result.queries,
        perturbation_pct: result.perturbation_pct,
        semantic_similarity: result.semantic_similarity,
        rounds: result.rounds,
        error: None,
    };
    print!("{}", report::render_single_diff(&row));
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Attack(args) => cmd_attack(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Single(args) => cmd_single(args),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
