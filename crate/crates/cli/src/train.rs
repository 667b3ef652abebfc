//! `train`: split, fit and evaluate on an encoded index.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use dfhc_core::cnn::{
    build_model, evaluate, split_7_1_2, train, CnnModel, EpochStats, LabeledImages, ModelConfig,
    TrainConfig,
};
use dfhc_core::raster::{read_png, ImageRaster};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::encode::{read_index, IndexRow, MIN_CLASS_SAMPLES};
use crate::error::{create_dir, write_json, CliError, Result};

pub const REPORT_FILE: &str = "report.json";
pub const CONFUSION_FILE: &str = "confusion.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const MODEL_FILE: &str = "model.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: String,
    /// SHA-256 over the sorted `(source_id, label)` pairs of the index.
    pub dataset_fingerprint: String,
    pub classes: Vec<String>,
    pub image_size: usize,
    pub channels: usize,
    /// Distinct fold widths used by the encoded segments.
    pub fold_widths: Vec<usize>,
    pub split: SplitSizes,
    pub train_config: TrainConfig,
    pub epochs: Vec<EpochStats>,
    pub best_epoch: Option<usize>,
    pub best_val_accuracy: Option<f64>,
    pub test_accuracy: f64,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<u64>>,
}

pub fn dataset_fingerprint(rows: &[IndexRow]) -> String {
    let mut pairs: Vec<(&str, &str)> = rows
        .iter()
        .map(|r| (r.source_id.as_str(), r.label.as_str()))
        .collect();
    pairs.sort_unstable();
    let mut hasher = Sha256::new();
    for (id, label) in pairs {
        hasher.update(id.as_bytes());
        hasher.update(b"\t");
        hasher.update(label.as_bytes());
        hasher.update(b"\n");
    }
    format!("{:x}", hasher.finalize())
}

fn load_image(base: &Path, row: &IndexRow) -> Result<ImageRaster> {
    let path = base.join(&row.path);
    let img = read_png(&path).map_err(|e| CliError::Data(e.to_string()))?;
    if (img.width(), img.height(), img.channels()) != (row.size, row.size, row.channels) {
        return Err(CliError::Data(format!(
            "{}: decoded {}x{}x{}, index declares {}x{}x{}",
            path.display(),
            img.width(),
            img.height(),
            img.channels(),
            row.size,
            row.size,
            row.channels
        )));
    }
    Ok(img)
}

fn uniform<T: PartialEq + std::fmt::Debug>(
    rows: &[IndexRow],
    what: &str,
    f: impl Fn(&IndexRow) -> T,
) -> Result<T> {
    let first = f(&rows[0]);
    match rows.iter().find(|r| f(r) != first) {
        Some(r) => Err(CliError::Data(format!(
            "index mixes {what}: {:?} and {:?}",
            first,
            f(r)
        ))),
        None => Ok(first),
    }
}

pub fn cmd_train(index_path: &Path, config: &RunConfig, out: &Path) -> Result<RunReport> {
    config.validate()?;
    let rows = read_index(index_path)?;
    if rows.is_empty() {
        return Err(CliError::Data(format!("{} lists no images", index_path.display())));
    }
    let method = uniform(&rows, "methods", |r| r.method.clone())?;
    let size = uniform(&rows, "image sizes", |r| r.size)?;
    let channels = uniform(&rows, "channel counts", |r| r.channels)?;

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &rows {
        *counts.entry(r.label.as_str()).or_default() += 1;
    }
    if counts.len() < 2 {
        return Err(CliError::Data(format!("need at least 2 classes, found {}", counts.len())));
    }
    if let Some((label, n)) = counts.iter().find(|(_, &n)| n < MIN_CLASS_SAMPLES) {
        return Err(CliError::Data(format!(
            "class {label:?} has {n} samples; at least {MIN_CLASS_SAMPLES} are needed to split"
        )));
    }
    let classes: Vec<String> = counts.keys().map(|s| s.to_string()).collect();
    let class_of = |label: &str| classes.iter().position(|c| c == label).expect("known label");

    let base = index_path.parent().unwrap_or(Path::new(""));
    let images = rows
        .iter()
        .map(|r| load_image(base, r))
        .collect::<Result<Vec<_>>>()?;

    let samples: Vec<(usize, usize)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| (i, class_of(&r.label)))
        .collect();
    let split = split_7_1_2(samples, config.seed)?;
    let sizes = SplitSizes {
        train: split.train.len(),
        val: split.val.len(),
        test: split.test.len(),
    };
    let test_pairs: Vec<(ImageRaster, usize)> =
        split.test.iter().map(|&(i, l)| (images[i].clone(), l)).collect();
    let split = split.map(|i| images[i].clone());

    let mut model = match &config.cnn.conv_channels {
        None => build_model(size, channels, classes.len(), config.seed)?,
        Some(widths) => CnnModel::from_config(ModelConfig {
            conv_channels: widths.clone(),
            ..ModelConfig::new(size, channels, classes.len(), config.seed)
        })?,
    };
    let train_config = config.train_config();
    log::info!(
        "training {method} on {} classes, split {}/{}/{}",
        classes.len(),
        sizes.train,
        sizes.val,
        sizes.test
    );
    let history = train(&mut model, &split, &train_config)?;

    let metrics = evaluate(&model, &LabeledImages::from_pairs(&test_pairs)?)?;

    let mut fold_widths: Vec<usize> = rows.iter().map(|r| r.fold_width).collect();
    fold_widths.sort_unstable();
    fold_widths.dedup();

    let report = RunReport {
        method,
        dataset_fingerprint: dataset_fingerprint(&rows),
        classes,
        image_size: size,
        channels,
        fold_widths,
        split: sizes,
        train_config,
        epochs: history.epochs,
        best_epoch: history.best_epoch,
        best_val_accuracy: history.best_val_accuracy,
        test_accuracy: metrics.accuracy,
        confusion: metrics.confusion.rows().map(<[u64]>::to_vec).collect(),
    };

    create_dir(out)?;
    write_json(&out.join(REPORT_FILE), &report)?;
    let confusion_path = out.join(CONFUSION_FILE);
    std::fs::write(&confusion_path, metrics.confusion.to_csv()).map_err(CliError::io(&confusion_path))?;
    let summary_path = out.join(SUMMARY_FILE);
    std::fs::write(&summary_path, summary_text(&report)).map_err(CliError::io(&summary_path))?;
    model.save(&out.join(MODEL_FILE))?;
    Ok(report)
}

pub fn summary_text(r: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "method:        {}", r.method);
    let _ = writeln!(s, "dataset:       {}", r.dataset_fingerprint);
    let _ = writeln!(s, "classes:       {}", r.classes.join(", "));
    let _ = writeln!(s, "image:         {0}x{0}x{1}", r.image_size, r.channels);
    let widths: Vec<String> = r.fold_widths.iter().map(usize::to_string).collect();
    let _ = writeln!(s, "fold width:    {}", widths.join("/"));
    let _ = writeln!(s, "split:         {}/{}/{}", r.split.train, r.split.val, r.split.test);
    let t = &r.train_config;
    let _ = writeln!(
        s,
        "training:      {} epochs, batch {}, lr {}, momentum {}, seed {}",
        t.epochs, t.batch_size, t.lr, t.momentum, t.seed
    );
    for e in &r.epochs {
        let val = e.val_accuracy.map_or("n/a".into(), |a| format!("{a:.4}"));
        let _ = writeln!(s, "  epoch {:>3}: loss {:.6}  val {val}", e.epoch, e.train_loss);
    }
    if let Some(b) = r.best_epoch {
        let _ = writeln!(s, "kept epoch:    {b}");
    }
    let _ = writeln!(s, "test accuracy: {:.4}", r.test_accuracy);
    let _ = writeln!(s, "confusion (rows true, columns predicted):");
    for row in &r.confusion {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>5}")).collect();
        let _ = writeln!(s, "  {}", cells.join(""));
    }
    s
}
