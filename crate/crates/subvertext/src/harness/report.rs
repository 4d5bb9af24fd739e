//! Human-readable and CSV report rendering. Columns follow the usual
//! benchmark-table order: original accuracy, attacked accuracy,
//! perturbation %, query #, semantic similarity, then ASP.

use super::metrics::{MetricSummary, RunReport};
use super::{SampleOutcome, SweepRow};
use crate::types::Substitution;

fn cell(summary: &MetricSummary, decimals: usize) -> String {
    format!(
        "{mean:.decimals$} ({std:.decimals$})",
        mean = summary.mean,
        std = summary.std,
    )
}

const HEADERS: [&str; 6] = [
    "Original Acc",
    "Attacked Acc",
    "Perturb %",
    "Query #",
    "Semantic Sim",
    "ASP",
];

fn report_cells(report: &RunReport) -> [String; 6] {
    [
        cell(&report.original_acc, 2),
        cell(&report.after_attack_acc, 2),
        cell(&report.perturb_pct, 2),
        cell(&report.queries, 1),
        cell(&report.semantic_sim, 3),
        cell(&report.asp, 3),
    ]
}

fn render_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, value) in row.iter().enumerate() {
            widths[i] = widths[i].max(value.len());
        }
    }
    let line = |cells: &[String]| -> String {
        cells
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{c:<width$}", width = widths[i]))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = String::new();
    out.push_str(&line(header));
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

/// Fixed-width table with "mean (std)" cells, one row per run.
pub fn render_metrics_table(report: &RunReport) -> String {
    let header: Vec<String> = HEADERS.iter().map(|h| h.to_string()).collect();
    render_table(&header, &[report_cells(report).to_vec()])
}

pub fn render_metrics_csv(report: &RunReport) -> String {
    let mut out = String::from("metric,mean,std\n");
    for (name, summary) in [
        ("original_acc", &report.original_acc),
        ("after_attack_acc", &report.after_attack_acc),
        ("perturb_pct", &report.perturb_pct),
        ("queries", &report.queries),
        ("semantic_sim", &report.semantic_sim),
        ("asp", &report.asp),
    ] {
        out.push_str(&format!("{name},{},{}\n", summary.mean, summary.std));
    }
    out
}

/// Comparison table for a sweep: one row per axis value.
pub fn render_sweep_table(axis: &str, rows: &[SweepRow]) -> String {
    let mut header = vec![axis.to_string()];
    header.extend(HEADERS.iter().map(|h| h.to_string()));
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|row| {
            let mut cells = vec![row.value.clone()];
            cells.extend(report_cells(&row.output.report));
            cells
        })
        .collect();
    render_table(&header, &body)
}

pub fn render_sweep_csv(axis: &str, rows: &[SweepRow]) -> String {
    let mut out = format!(
        "{axis},original_acc_mean,original_acc_std,after_attack_acc_mean,after_attack_acc_std,\
         perturb_pct_mean,perturb_pct_std,queries_mean,queries_std,semantic_sim_mean,\
         semantic_sim_std,asp_mean,asp_std\n"
    );
    for row in rows {
        let r = &row.output.report;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.value,
            r.original_acc.mean,
            r.original_acc.std,
            r.after_attack_acc.mean,
            r.after_attack_acc.std,
            r.perturb_pct.mean,
            r.perturb_pct.std,
            r.queries.mean,
            r.queries.std,
            r.semantic_sim.mean,
            r.semantic_sim.std,
            r.asp.mean,
            r.asp.std,
        ));
    }
    out
}

/// Before/after view of one attack with the substituted words bolded.
pub fn render_single_diff(row: &SampleOutcome) -> String {
    let mark = |text: &str, pick: fn(&Substitution) -> &str| -> String {
        let targets: Vec<&str> = row.substitutions.iter().map(pick).collect();
        text.split_whitespace()
            .map(|token| {
                let bare: String = token
                    .chars()
                    .filter(|c| c.is_alphanumeric() || *c == '\'' || *c == '-')
                    .collect();
                if targets.iter().any(|t| bare.eq_ignore_ascii_case(t)) {
                    format!("**{token}**")
                } else {
                    token.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut out = String::new();
    out.push_str(&format!(
        "status: {}\n",
        serde_json::to_string(&row.status).unwrap().trim_matches('"')
    ));
    out.push_str(&format!(
        "original:    {}\n",
        mark(&row.original, |s| &s.original)
    ));
    out.push_str(&format!(
        "adversarial: {}\n",
        mark(&row.adversarial, |s| &s.replacement)
    ));
    if row.substitutions.is_empty() {
        out.push_str("substitutions: none\n");
    } else {
        out.push_str("substitutions:\n");
        for sub in &row.substitutions {
            out.push_str(&format!(
                "  [{}] {} -> {}\n",
                sub.index, sub.original, sub.replacement
            ));
        }
    }
    out.push_str(&format!(
        "queries: {}  similarity: {:.3}  perturbation: {:.2}%  rounds: {}\n",
        row.queries, row.semantic_similarity, row.perturbation_pct, row.rounds
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::metrics::{summarize, RunMetrics, StatusCounts};
    use crate::harness::OutcomeStatus;

    fn metrics(original: f64, attacked: f64) -> RunMetrics {
        RunMetrics {
            samples: 10,
            original_acc: original,
            after_attack_acc: attacked,
            avg_perturb_pct: 10.0,
            avg_queries: 50.0,
            avg_semantic_sim: 0.9,
            asp: 0.5,
            counts: StatusCounts::default(),
        }
    }

    #[test]
    fn table_renders_mean_std_cells() {
        let report = summarize(&[metrics(90.0, 30.0), metrics(80.0, 40.0)]);
        let table = render_metrics_table(&report);
        assert!(table.contains("Original Acc"));
        assert!(table.contains("85.00 (7.07)"), "got:\n{table}");
        assert!(table.contains("35.00 (7.07)"));
    }

    #[test]
    fn single_diff_bolds_substituted_words() {
        let row = SampleOutcome {
            repetition: 0,
            id: "x".into(),
            status: OutcomeStatus::Success,
            label: 1,
            original: "a great movie overall.".into(),
            adversarial: "a terrible movie overall.".into(),
            substitutions: vec![Substitution {
                index: 1,
                original: "great".into(),
                replacement: "terrible".into(),
            }],
            queries: 9,
            perturbation_pct: 25.0,
            semantic_similarity: 0.8,
            rounds: 1,
            error: None,
        };
        let diff = render_single_diff(&row);
        assert!(diff.contains("**great**"));
        assert!(diff.contains("**terrible**"));
        assert!(diff.contains("queries: 9"));
    }
}
