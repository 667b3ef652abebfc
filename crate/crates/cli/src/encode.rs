//! `encode`: segments to PNG files plus an index.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use dfhc_core::codec::{encode_segment, Encoded};
use dfhc_core::raster::write_png;
use dfhc_core::series::SeriesSegment;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{create_dir, write_json, CliError, Result};
use crate::manifest::{load_csv_dataset, DatasetManifest};

pub const INDEX_FILE: &str = "index.csv";
pub const IMAGE_DIR: &str = "images";
/// Fewest samples a class needs to be trainable.
pub const MIN_CLASS_SAMPLES: usize = 5;

/// One line of the index written next to the images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRow {
    /// PNG path relative to the index file.
    pub path: String,
    pub source_id: String,
    pub label: String,
    /// The label's class has enough samples for a 7:1:2 split.
    pub split_eligible: bool,
    pub method: String,
    pub size: usize,
    pub channels: usize,
    pub fold_width: usize,
    pub effective_len: usize,
    pub strip_rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodeSummary {
    pub index_path: PathBuf,
    pub written: usize,
    pub failed: usize,
}

/// Keeps ASCII letters, digits, `-`, `_` and `.`; anything else becomes `_`.
pub fn sanitize_file_stem(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Encodes segments in parallel and writes the results in input order.
pub fn encode_segments(
    segments: &[SeriesSegment],
    config: &RunConfig,
    out: &Path,
) -> Result<EncodeSummary> {
    config.validate()?;
    if segments.is_empty() {
        return Err(CliError::Data("dataset produced no segments".into()));
    }
    let mut seen = HashSet::new();
    for s in segments {
        if !seen.insert(s.source_id.as_str()) {
            return Err(CliError::Data(format!("duplicate source id {:?}", s.source_id)));
        }
    }

    let results: Vec<std::result::Result<Encoded, String>> = segments
        .par_iter()
        .map(|s| encode_segment(s, &config.codec).map_err(|e| e.to_string()))
        .collect();

    let mut class_counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut failed = 0;
    for (seg, res) in segments.iter().zip(&results) {
        match res {
            Ok(_) => *class_counts.entry(seg.label.as_str()).or_default() += 1,
            Err(e) => {
                failed += 1;
                log::error!("{}: {e}", seg.source_id);
            }
        }
    }
    if failed == segments.len() {
        return Err(CliError::Data(format!("all {failed} segments failed to encode")));
    }
    for (label, &n) in &class_counts {
        if n < MIN_CLASS_SAMPLES {
            log::warn!("class {label:?} has {n} samples, fewer than {MIN_CLASS_SAMPLES}");
        }
    }

    let image_dir = out.join(IMAGE_DIR);
    create_dir(&image_dir)?;
    let method = config.codec.method.name();
    let mut rows = Vec::with_capacity(segments.len() - failed);
    for (seg, res) in segments.iter().zip(results) {
        let Ok(enc) = res else { continue };
        let file = format!("{}_{method}.png", sanitize_file_stem(&seg.source_id));
        write_png(&enc.image, &image_dir.join(&file))
            .map_err(|e| CliError::Data(e.to_string()))?;
        rows.push(IndexRow {
            path: format!("{IMAGE_DIR}/{file}"),
            source_id: seg.source_id.clone(),
            label: seg.label.clone(),
            split_eligible: class_counts[seg.label.as_str()] >= MIN_CLASS_SAMPLES,
            method: method.to_string(),
            size: enc.image.width(),
            channels: enc.image.channels(),
            fold_width: enc.plan.width,
            effective_len: enc.plan.effective_len,
            strip_rows: enc.plan.strip_rows,
        });
    }

    let index_path = out.join(INDEX_FILE);
    write_index(&index_path, &rows)?;
    write_json(&out.join("encode_config.json"), config)?;
    log::info!(
        "wrote {} images ({failed} failed) to {}",
        rows.len(),
        image_dir.display()
    );
    Ok(EncodeSummary {
        index_path,
        written: rows.len(),
        failed,
    })
}

/// Loads the manifest's dataset, applying any window override from the config.
pub fn cmd_encode(manifest: &DatasetManifest, config: &RunConfig, out: &Path) -> Result<EncodeSummary> {
    let mut manifest = manifest.clone();
    manifest.override_window(config.window_len, config.overlap)?;
    let segments = load_csv_dataset(&manifest)?;
    encode_segments(&segments, config, out)
}

pub fn write_index(path: &Path, rows: &[IndexRow]) -> Result<()> {
    let csv_err = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn read_index(path: &Path) -> Result<Vec<IndexRow>> {
    let csv_err = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_stems_are_sanitized() {
        assert_eq!(sanitize_file_stem("a b/c:d_w1"), "a_b_c_d_w1");
        assert_eq!(sanitize_file_stem("ok-1.2_x"), "ok-1.2_x");
    }

    #[test]
    fn index_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![IndexRow {
            path: "images/a_RGB.png".into(),
            source_id: "a".into(),
            label: "x, y".into(),
            split_eligible: true,
            method: "RGB".into(),
            size: 32,
            channels: 3,
            fold_width: 32,
            effective_len: 512,
            strip_rows: 2,
        }];
        let p = dir.path().join("index.csv");
        write_index(&p, &rows).unwrap();
        assert_eq!(read_index(&p).unwrap(), rows);
    }
}
