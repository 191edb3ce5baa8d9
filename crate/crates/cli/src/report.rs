//! CSV and text renderings of the analysis and experiment results.

use std::path::Path;

use adeffect_core::analysis::{CorrelationRow, ExtremesReport, ReliabilityReport};
use adeffect_core::evaluation::{ExperimentReport, TaskKind, TaskSpec};
use anyhow::{Context, Result};

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_correlations(path: &Path, rows: &[CorrelationRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["feature", "pearson_r", "n"])?;
    for r in rows {
        w.write_record([r.feature.clone(), opt(r.pearson_r), r.n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_reliability(path: &Path, report: &ReliabilityReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["threshold_percent", "count", "fraction"])?;
    for ((t, c), f) in report.thresholds.iter().zip(&report.counts).zip(&report.fractions) {
        w.write_record([t.to_string(), c.to_string(), f.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_extremes(path: &Path, report: &ExtremesReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["side", report.group_by.name(), "full_share", "extreme_count", "extreme_share", "lift"])?;
    for (side, rows) in [("top", &report.top), ("bottom", &report.bottom)] {
        for g in rows {
            w.write_record([
                side.to_string(),
                g.group.to_string(),
                g.full_share.to_string(),
                g.extreme_count.to_string(),
                g.extreme_share.to_string(),
                g.lift.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_seed_accuracies(path: &Path, report: &ExperimentReport) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["seed".to_string()];
    header.extend(report.specs.iter().map(|s| s.key()));
    header.push("ensemble".into());
    w.write_record(&header)?;
    for run in &report.runs {
        let mut row = vec![run.seed.to_string()];
        row.extend(run.classifier_accuracy.iter().map(f64::to_string));
        row.push(run.ensemble_accuracy.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per classifier plus the ensemble and chance, one accuracy
/// column per task; tasks that were not run stay empty.
pub fn table_rows(reports: &[ExperimentReport]) -> Vec<[String; 5]> {
    let column = |kind: TaskKind| reports.iter().find(|r| r.task.kind == kind);
    let cells = |f: &dyn Fn(&ExperimentReport) -> f64| -> [String; 3] {
        TaskKind::ALL.map(|k| column(k).map(|r| f(r).to_string()).unwrap_or_default())
    };
    let mut rows = Vec::new();
    let Some(first) = reports.first() else {
        return rows;
    };
    for (i, spec) in first.specs.iter().enumerate() {
        let [b, f4, f5] = cells(&|r| r.classifier_mean[i]);
        rows.push([spec.kind.label().to_string(), spec.feature.clone(), b, f4, f5]);
    }
    let [b, f4, f5] = cells(&|r| r.ensemble_mean);
    rows.push(["Combined Ensemble".into(), String::new(), b, f4, f5]);
    let [b, f4, f5] = cells(&|r| TaskSpec::new(r.task.kind).baseline());
    rows.push(["Baseline".into(), String::new(), b, f4, f5]);
    rows
}

pub const TABLE_HEADER: [&str; 5] = ["classifier", "feature", "binary", "four_way", "five_way"];

pub fn write_table(path: &Path, reports: &[ExperimentReport]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(TABLE_HEADER)?;
    for row in table_rows(reports) {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-width text version of the accuracy table.
pub fn format_table(reports: &[ExperimentReport]) -> String {
    let fmt = |s: &str| s.parse::<f64>().map(|v| format!("{v:.4}")).unwrap_or_else(|_| "-".into());
    let mut out = format!(
        "{:<20} {:<30} {:>8} {:>8} {:>8}\n",
        "Classifier", "Feature", "Binary", "Four-way", "Five-way"
    );
    for row in table_rows(reports) {
        out.push_str(&format!(
            "{:<20} {:<30} {:>8} {:>8} {:>8}\n",
            row[0],
            row[1],
            fmt(&row[2]),
            fmt(&row[3]),
            fmt(&row[4])
        ));
    }
    out
}
