//! `compare`: per-method accuracy table across training runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{create_dir, read_json, CliError, Result};
use crate::train::{RunReport, REPORT_FILE};

pub const COMPARISON_CSV: &str = "comparison.csv";
pub const COMPARISON_TXT: &str = "comparison.txt";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub method: String,
    pub test_accuracy: f64,
    pub test_samples: usize,
    /// Fold widths joined by `/`.
    pub fold_width: String,
    pub run: String,
}

/// Rows sorted by accuracy, best first; ties keep method name order.
pub fn compare_reports(runs: &[(PathBuf, RunReport)]) -> Result<Vec<ComparisonRow>> {
    if runs.len() < 2 {
        return Err(CliError::Config(format!(
            "comparison needs at least 2 runs, got {}",
            runs.len()
        )));
    }
    let (first_dir, first) = &runs[0];
    for (dir, r) in &runs[1..] {
        if r.dataset_fingerprint != first.dataset_fingerprint || r.classes != first.classes {
            return Err(CliError::Data(format!(
                "{} and {} were trained on different datasets",
                first_dir.display(),
                dir.display()
            )));
        }
    }
    let mut rows: Vec<ComparisonRow> = runs
        .iter()
        .map(|(dir, r)| ComparisonRow {
            method: r.method.clone(),
            test_accuracy: r.test_accuracy,
            test_samples: r.split.test,
            fold_width: r
                .fold_widths
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join("/"),
            run: dir.display().to_string(),
        })
        .collect();
    rows.sort_by(|a, b| {
        b.test_accuracy
            .total_cmp(&a.test_accuracy)
            .then_with(|| a.method.cmp(&b.method))
    });
    Ok(rows)
}

pub fn comparison_text(rows: &[ComparisonRow]) -> String {
    let mw = rows.iter().map(|r| r.method.len()).max().unwrap_or(0).max("Method".len());
    let ww = rows.iter().map(|r| r.fold_width.len()).max().unwrap_or(0).max("w".len());
    let mut s = String::new();
    let _ = writeln!(s, "{:<mw$}  {:>12}  {:>ww$}  {:>6}", "Method", "Accuracy (%)", "w", "Test");
    let _ = writeln!(s, "{}", "-".repeat(mw + ww + 26));
    for r in rows {
        let _ = writeln!(
            s,
            "{:<mw$}  {:>12.2}  {:>ww$}  {:>6}",
            r.method,
            100.0 * r.test_accuracy,
            r.fold_width,
            r.test_samples
        );
    }
    s
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Data(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Data(e.to_string()))
}

/// Reads `report.json` from each run directory, builds the table and, when
/// `out` is given, writes it there as CSV and text.
pub fn cmd_compare(run_dirs: &[PathBuf], out: Option<&Path>) -> Result<(Vec<ComparisonRow>, String)> {
    let runs = run_dirs
        .iter()
        .map(|d| Ok((d.clone(), read_json::<RunReport>(&d.join(REPORT_FILE))?)))
        .collect::<Result<Vec<_>>>()?;
    let rows = compare_reports(&runs)?;
    let text = comparison_text(&rows);
    if let Some(out) = out {
        create_dir(out)?;
        let csv_path = out.join(COMPARISON_CSV);
        std::fs::write(&csv_path, comparison_csv(&rows)?).map_err(CliError::io(&csv_path))?;
        let txt_path = out.join(COMPARISON_TXT);
        std::fs::write(&txt_path, &text).map_err(CliError::io(&txt_path))?;
    }
    Ok((rows, text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::SplitSizes;
    use dfhc_core::cnn::TrainConfig;

    fn report(method: &str, acc: f64, fp: &str) -> RunReport {
        RunReport {
            method: method.into(),
            dataset_fingerprint: fp.into(),
            classes: vec!["a".into(), "b".into()],
            image_size: 32,
            channels: 3,
            fold_widths: vec![32],
            split: SplitSizes {
                train: 14,
                val: 2,
                test: 4,
            },
            train_config: TrainConfig::default(),
            epochs: vec![],
            best_epoch: None,
            best_val_accuracy: None,
            test_accuracy: acc,
            confusion: vec![vec![2, 0], vec![0, 2]],
        }
    }

    #[test]
    fn sorted_by_accuracy_descending() {
        let runs = vec![
            ("r1".into(), report("RGB", 0.75, "f")),
            ("r2".into(), report("RGB_FFT", 1.0, "f")),
            ("r3".into(), report("Gray", 0.75, "f")),
        ];
        let rows = compare_reports(&runs).unwrap();
        let order: Vec<&str> = rows.iter().map(|r| r.method.as_str()).collect();
        assert_eq!(order, ["RGB_FFT", "Gray", "RGB"]);
        let text = comparison_text(&rows);
        assert!(text.lines().nth(2).unwrap().starts_with("RGB_FFT"));
        assert!(text.contains("100.00"));
        let csv = comparison_csv(&rows).unwrap();
        assert_eq!(csv.lines().next().unwrap(), "method,test_accuracy,test_samples,fold_width,run");
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn mismatched_datasets_rejected() {
        let runs = vec![("a".into(), report("RGB", 1.0, "x")), ("b".into(), report("Gray", 1.0, "y"))];
        assert!(matches!(compare_reports(&runs), Err(CliError::Data(_))));
        assert!(matches!(compare_reports(&runs[..1]), Err(CliError::Config(_))));
    }
}
