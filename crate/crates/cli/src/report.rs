//! Aggregation of finished result files into a comparison table.
//!
//! Each result CSV holds one run; its terminal metric value is the run's
//! score. Scores are grouped per (function, policy), reduced to the metric's
//! summary statistic, and rendered two ways: a plain-text table for reading
//! and a machine CSV that preserves full precision and the significance
//! flags.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use sedkit_core::bench::{aggregate, AggregateTable, MetricKind, RunSummary};

use crate::error::{CliError, Result};
use crate::format::{fmt_real, parse_real};
use crate::runner::{write_atomic, RESULT_HEADER};

/// Terminal summary of one result file: the task it came from plus the run's
/// identity and final metric value.
#[derive(Debug)]
struct FileSummary {
    task: String,
    summary: RunSummary,
}

fn parse_run_csv(path: &Path) -> Result<FileSummary> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| CliError::input(format!("{} is empty", path.display())))?;
    if header != RESULT_HEADER {
        return Err(CliError::input(format!(
            "{} does not look like a result file (unexpected header)",
            path.display()
        )));
    }
    let last = lines.next_back().ok_or_else(|| {
        CliError::input(format!("{} has no data rows", path.display()))
    })?;
    let fields: Vec<&str> = last.split(',').collect();
    if fields.len() != 9 {
        return Err(CliError::input(format!(
            "{}: expected 9 columns, found {}",
            path.display(),
            fields.len()
        )));
    }
    let repeat: usize = fields[3].parse().map_err(|_| {
        CliError::input(format!("{}: malformed repeat {:?}", path.display(), fields[3]))
    })?;
    let final_metric = parse_real(fields[7])
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(FileSummary {
        task: fields[0].to_string(),
        summary: RunSummary {
            function: fields[1].to_string(),
            policy: fields[2].to_string(),
            repeat,
            final_metric,
        },
    })
}

fn result_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir)
        .map_err(|e| CliError::io(format!("reading directory {}", dir.display()), e))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(format!("listing {}", dir.display()), e))?;
        let path = entry.path();
        let is_csv = path.extension().is_some_and(|e| e == "csv");
        let is_aggregate_output = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with("aggregate_"));
        if is_csv && !is_aggregate_output {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(CliError::input(format!(
            "{} contains no result files",
            dir.display()
        )));
    }
    Ok(files)
}

fn task_for_metric(metric: MetricKind) -> &'static str {
    match metric {
        MetricKind::MeanGap => "bo",
        MetricKind::MedianFracErr => "bq",
    }
}

fn metric_headline(metric: MetricKind) -> &'static str {
    match metric {
        MetricKind::MeanGap => "mean GAP over repeats (higher is better)",
        MetricKind::MedianFracErr => "median fractional error over repeats (lower is better)",
    }
}

/// Renders the table as aligned plain text with significance markers.
pub fn render_table(table: &AggregateTable) -> String {
    let name_width = table
        .rows
        .iter()
        .map(|r| r.function.len())
        .chain(["function".len(), "Average".len()])
        .max()
        .unwrap_or(8);
    let col_widths: Vec<usize> = table.policies.iter().map(|p| p.len().max(9)).collect();

    let mut out = String::new();
    out.push_str(&format!("{}\n\n", metric_headline(table.metric)));

    out.push_str(&format!("{:<name_width$}", "function"));
    for (p, w) in table.policies.iter().zip(&col_widths) {
        out.push_str(&format!(" | {p:>w$}"));
    }
    out.push('\n');
    let mut rule = format!("{:-<name_width$}", "");
    for w in &col_widths {
        rule.push_str(&format!("-+-{:-<w$}", ""));
    }
    out.push_str(&rule);
    out.push('\n');

    for row in &table.rows {
        out.push_str(&format!("{:<name_width$}", row.function));
        for (cell, w) in row.cells.iter().zip(&col_widths) {
            let mark = if cell.best {
                "* "
            } else if cell.not_worse_than_best {
                "~ "
            } else {
                ""
            };
            out.push_str(&format!(" | {:>w$}", format!("{mark}{:.4}", cell.value)));
        }
        out.push('\n');
    }

    out.push_str(&rule);
    out.push('\n');
    out.push_str(&format!("{:<name_width$}", "Average"));
    for (mean, w) in table.column_means().iter().zip(&col_widths) {
        out.push_str(&format!(" | {:>w$}", format!("{mean:.4}")));
    }
    out.push('\n');

    out.push_str(
        "\n* best in row    ~ not significantly worse than best \
         (one-sided Wilcoxon signed-rank, p >= 0.05)\n",
    );
    let excluded: Vec<String> = table
        .rows
        .iter()
        .filter(|r| r.excluded_repeats > 0)
        .map(|r| format!("{}: {}", r.function, r.excluded_repeats))
        .collect();
    if !excluded.is_empty() {
        out.push_str(&format!(
            "repeats excluded for non-finite scores: {}\n",
            excluded.join(", ")
        ));
    }
    out
}

/// Machine-readable companion: one row per cell at full precision, then the
/// column means as `Average` rows with the per-cell fields left empty.
pub fn machine_csv(table: &AggregateTable) -> String {
    let metric_name = match table.metric {
        MetricKind::MeanGap => "gap",
        MetricKind::MedianFracErr => "fracerr",
    };
    let mut out = String::from(
        "metric,function,policy,value,repeats,best,not_worse_than_best,p_vs_best,excluded_repeats\n",
    );
    for row in &table.rows {
        for (policy, cell) in table.policies.iter().zip(&row.cells) {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                metric_name,
                row.function,
                policy,
                fmt_real(cell.value),
                cell.repeats,
                u8::from(cell.best),
                u8::from(cell.not_worse_than_best),
                fmt_real(cell.p_vs_best),
                row.excluded_repeats,
            ));
        }
    }
    for (policy, mean) in table.policies.iter().zip(table.column_means()) {
        out.push_str(&format!(
            "{},Average,{},{},,,,,\n",
            metric_name,
            policy,
            fmt_real(mean),
        ));
    }
    out
}

/// Reads every result file under `dir`, aggregates terminal metrics, writes
/// `aggregate_<metric>.txt` and `aggregate_<metric>.csv` back into `dir`, and
/// returns the rendered text table.
pub fn cmd_aggregate(dir: &Path, metric: MetricKind, metric_name: &str) -> Result<String> {
    let files = result_files(dir)?;
    let mut tasks = BTreeSet::new();
    let mut summaries = Vec::with_capacity(files.len());
    for path in &files {
        let parsed = parse_run_csv(path)?;
        tasks.insert(parsed.task);
        summaries.push(parsed.summary);
    }
    if tasks.len() > 1 {
        let found: Vec<String> = tasks.into_iter().collect();
        return Err(CliError::input(format!(
            "cannot aggregate across task kinds: directory mixes {}",
            found.join(" and ")
        )));
    }
    let task = tasks.into_iter().next().expect("at least one file parsed");
    if task != task_for_metric(metric) {
        return Err(CliError::input(format!(
            "metric '{metric_name}' applies to task '{}' but the directory holds task '{task}' runs",
            task_for_metric(metric)
        )));
    }

    let table = aggregate(&summaries, metric)?;
    let text = render_table(&table);
    write_atomic(&dir.join(format!("aggregate_{metric_name}.txt")), &text)?;
    write_atomic(
        &dir.join(format!("aggregate_{metric_name}.csv")),
        &machine_csv(&table),
    )?;
    Ok(text)
}
