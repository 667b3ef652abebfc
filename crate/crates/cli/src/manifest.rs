//! CSV dataset description and loading.

use std::path::{Path, PathBuf};

use dfhc_core::series::{window_segments, SeriesSegment};
use serde::{Deserialize, Serialize};

use crate::error::{read_json, CliError, Result};

/// One cluster of 1 to 3 channel columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSchema {
    pub name: String,
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: PathBuf,
    /// Label for the whole file. Required unless the manifest names a label column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// How rows of a file become segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Grouping {
    /// Every file is one sample.
    PerFile,
    /// Every file is a stream cut into fixed windows.
    Windowed {
        window_len: usize,
        #[serde(default)]
        overlap: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    /// Directory the file paths are relative to. A relative root is taken
    /// relative to the manifest's own directory.
    #[serde(default)]
    pub root: PathBuf,
    pub clusters: Vec<ClusterSchema>,
    pub files: Vec<FileEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_column: Option<String>,
    pub grouping: Grouping,
    /// Hz; informational only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling_rate: Option<f64>,
}

impl DatasetManifest {
    /// Loads a manifest and resolves `root` against the manifest location.
    pub fn load(path: &Path) -> Result<Self> {
        let mut manifest: DatasetManifest = read_json(path)?;
        if manifest.root.is_relative() {
            let base = path.parent().unwrap_or(Path::new(""));
            manifest.root = base.join(&manifest.root);
        }
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        if self.clusters.is_empty() {
            return Err(CliError::Config("manifest declares no clusters".into()));
        }
        for c in &self.clusters {
            if c.columns.is_empty() || c.columns.len() > 3 {
                return Err(CliError::Config(format!(
                    "cluster {:?} must have 1 to 3 columns, has {}",
                    c.name,
                    c.columns.len()
                )));
            }
        }
        if self.files.is_empty() {
            return Err(CliError::Config("manifest lists no files".into()));
        }
        for f in &self.files {
            match (&f.label, &self.label_column) {
                (None, None) => {
                    return Err(CliError::Config(format!(
                        "{} has no label and the manifest has no label_column",
                        f.path.display()
                    )))
                }
                (Some(l), _) if l.trim().is_empty() => {
                    return Err(CliError::Config(format!("{} has an empty label", f.path.display())))
                }
                _ => {}
            }
        }
        if let Grouping::Windowed { window_len, overlap } = self.grouping {
            if window_len < 2 || overlap >= window_len {
                return Err(CliError::Config(format!(
                    "window_len {window_len} with overlap {overlap} is invalid"
                )));
            }
        }
        Ok(())
    }

    /// Replaces the window parameters of a windowed manifest.
    pub fn override_window(&mut self, window_len: Option<usize>, overlap: Option<usize>) -> Result<()> {
        if window_len.is_none() && overlap.is_none() {
            return Ok(());
        }
        match &mut self.grouping {
            Grouping::Windowed {
                window_len: w,
                overlap: o,
            } => {
                *w = window_len.unwrap_or(*w);
                *o = overlap.unwrap_or(*o);
            }
            Grouping::PerFile => {
                return Err(CliError::Config(
                    "window settings given for a per-file dataset".into(),
                ))
            }
        }
        self.validate()
    }
}

/// Rows of one CSV file restricted to the manifest's columns.
struct Table {
    /// `clusters[channels[rows]]`
    values: Vec<Vec<Vec<f64>>>,
    labels: Option<Vec<String>>,
    rows: usize,
}

fn read_table(path: &Path, manifest: &DatasetManifest) -> Result<Option<Table>> {
    let display = path.display();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{display}: {e}")))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{display}: {e}")))?
        .clone();
    if headers.is_empty() {
        return Ok(None);
    }
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Data(format!("{display}: row 1: missing column {name:?}"))
        })
    };
    let columns: Vec<Vec<usize>> = manifest
        .clusters
        .iter()
        .map(|c| c.columns.iter().map(|n| find(n)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let label_idx = manifest.label_column.as_deref().map(find).transpose()?;

    let mut values: Vec<Vec<Vec<f64>>> =
        columns.iter().map(|c| vec![Vec::new(); c.len()]).collect();
    let mut labels = label_idx.map(|_| Vec::new());
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        // Row 1 is the header.
        let row = i + 2;
        let record = record.map_err(|e| CliError::Data(format!("{display}: row {row}: {e}")))?;
        for (cluster, cols) in columns.iter().enumerate() {
            for (k, &col) in cols.iter().enumerate() {
                let name = &manifest.clusters[cluster].columns[k];
                let cell = record.get(col).unwrap_or("");
                let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                    CliError::Data(format!(
                        "{display}: row {row}, column {name:?}: {cell:?} is not a finite number"
                    ))
                })?;
                values[cluster][k].push(v);
            }
        }
        if let (Some(idx), Some(labels)) = (label_idx, labels.as_mut()) {
            let label = record.get(idx).unwrap_or("").to_string();
            if label.is_empty() {
                return Err(CliError::Data(format!(
                    "{display}: row {row}, column {:?}: empty label",
                    manifest.label_column.as_deref().unwrap_or_default()
                )));
            }
            labels.push(label);
        }
        rows += 1;
    }
    if rows == 0 {
        return Ok(None);
    }
    Ok(Some(Table { values, labels, rows }))
}

/// Identifier derived from a file's relative path without its extension.
fn file_id(path: &Path) -> String {
    let stem = path.with_extension("");
    stem.components()
        .filter_map(|c| match c {
            std::path::Component::Normal(s) => Some(s.to_string_lossy().into_owned()),
            _ => None,
        })
        .collect::<Vec<_>>()
        .join("_")
}

fn slice_table(table: &Table, start: usize, end: usize) -> Vec<Vec<Vec<f64>>> {
    table
        .values
        .iter()
        .map(|cl| cl.iter().map(|ch| ch[start..end].to_vec()).collect())
        .collect()
}

/// Maximal runs of equal labels as `(start, end, label)`.
fn label_runs(labels: &[String]) -> Vec<(usize, usize, String)> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=labels.len() {
        if i == labels.len() || labels[i] != labels[start] {
            runs.push((start, i, labels[start].clone()));
            start = i;
        }
    }
    runs
}

fn segments_for_file(manifest: &DatasetManifest, entry: &FileEntry) -> Result<Vec<SeriesSegment>> {
    let path = manifest.root.join(&entry.path);
    let display = path.display().to_string();
    let Some(table) = read_table(&path, manifest)? else {
        log::warn!("{display}: no data rows, skipping");
        return Ok(Vec::new());
    };
    let id = file_id(&entry.path);
    let data_err = |e: dfhc_core::series::SeriesError| CliError::Data(format!("{display}: {e}"));

    // A fixed per-file label wins over the label column.
    let runs = match (&entry.label, &table.labels) {
        (Some(label), _) => vec![(0, table.rows, label.trim().to_string())],
        (None, Some(labels)) => label_runs(labels),
        (None, None) => unreachable!("validated manifest"),
    };

    match manifest.grouping {
        Grouping::PerFile => {
            if runs.len() > 1 {
                return Err(CliError::Data(format!(
                    "{display}: label column changes within a per-file sample"
                )));
            }
            if table.rows < 2 {
                log::warn!("{display}: a single data row is too short, skipping");
                return Ok(Vec::new());
            }
            let (_, _, label) = &runs[0];
            let seg = SeriesSegment::from_nested(slice_table(&table, 0, table.rows), label, id)
                .map_err(data_err)?;
            Ok(vec![seg])
        }
        Grouping::Windowed { window_len, overlap } => {
            let mut out = Vec::new();
            let multi = runs.len() > 1;
            for (k, (start, end, label)) in runs.into_iter().enumerate() {
                if end - start < window_len {
                    log::warn!(
                        "{display}: rows {}..{} ({label}) are shorter than one window of {window_len}",
                        start + 2,
                        end + 1
                    );
                    continue;
                }
                let run_id = if multi { format!("{id}_r{k}") } else { id.clone() };
                let stream = SeriesSegment::from_nested(slice_table(&table, start, end), label, run_id)
                    .map_err(data_err)?;
                out.extend(window_segments(&stream, window_len, overlap).map_err(data_err)?);
            }
            Ok(out)
        }
    }
}

/// Reads every file of the manifest into labelled segments, in manifest order.
pub fn load_csv_dataset(manifest: &DatasetManifest) -> Result<Vec<SeriesSegment>> {
    manifest.validate()?;
    let mut segments = Vec::new();
    for entry in &manifest.files {
        segments.extend(segments_for_file(manifest, entry)?);
    }
    Ok(segments)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runs_split_on_label_change() {
        let labels: Vec<String> = ["a", "a", "b", "b", "b", "a"].iter().map(|s| s.to_string()).collect();
        assert_eq!(
            label_runs(&labels),
            vec![(0, 2, "a".into()), (2, 5, "b".into()), (5, 6, "a".into())]
        );
    }

    #[test]
    fn file_ids_flatten_directories() {
        assert_eq!(file_id(Path::new("normal/run_1.csv")), "normal_run_1");
        assert_eq!(file_id(Path::new("x.csv")), "x");
    }

    #[test]
    fn grouping_json_shape() {
        let g: Grouping = serde_json::from_str(r#"{"mode":"windowed","window_len":4096}"#).unwrap();
        assert_eq!(g, Grouping::Windowed { window_len: 4096, overlap: 0 });
        let g: Grouping = serde_json::from_str(r#"{"mode":"per_file"}"#).unwrap();
        assert_eq!(g, Grouping::PerFile);
        assert!(serde_json::from_str::<Grouping>(r#"{"mode":"windowed"}"#).is_err());
    }
}
