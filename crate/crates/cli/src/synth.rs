//! Seeded synthetic multi-channel sinusoid datasets.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use dfhc_core::series::SeriesSegment;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{create_dir, write_json, CliError, Result};
use crate::manifest::{ClusterSchema, DatasetManifest, FileEntry, Grouping};

const AXES: [&str; 3] = ["x", "y", "z"];

/// Signal parameters of one class. `frequency` counts cycles per segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRecipe {
    pub frequency: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Gaussian noise standard deviation; falls back to `SynthSpec::noise_sigma`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub num_classes: usize,
    pub clusters: usize,
    /// Channels per cluster, 1 to 3.
    pub dims: usize,
    pub length: usize,
    pub samples_per_class: usize,
    #[serde(default)]
    pub noise_sigma: f64,
    /// Per-class recipes. When absent, class `k` oscillates at `2^(k+1)` cycles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<ClassRecipe>>,
    /// Draw a fresh phase per sample so classes differ only in frequency.
    #[serde(default = "default_true")]
    pub random_phase: bool,
    pub seed: u64,
}

impl SynthSpec {
    pub fn recipes(&self) -> Vec<ClassRecipe> {
        self.classes.clone().unwrap_or_else(|| {
            (0..self.num_classes)
                .map(|k| ClassRecipe {
                    frequency: 2f64.powi(k as i32 + 1),
                    amplitude: 1.0,
                    noise: None,
                })
                .collect()
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.num_classes == 0 || self.samples_per_class == 0 {
            return bad("need at least one class and one sample per class".into());
        }
        if self.clusters == 0 || !(1..=3).contains(&self.dims) {
            return bad(format!(
                "clusters must be positive and dims 1 to 3, got {} and {}",
                self.clusters, self.dims
            ));
        }
        if self.length < 2 {
            return bad(format!("length must be at least 2, got {}", self.length));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!("noise_sigma {} is invalid", self.noise_sigma));
        }
        let recipes = self.recipes();
        if recipes.len() != self.num_classes {
            return bad(format!(
                "{} class recipes for {} classes",
                recipes.len(),
                self.num_classes
            ));
        }
        for (i, r) in recipes.iter().enumerate() {
            let noise = r.noise.unwrap_or(self.noise_sigma);
            if !(r.frequency.is_finite() && r.amplitude.is_finite() && noise.is_finite() && noise >= 0.0) {
                return bad(format!("class {i} recipe has invalid parameters"));
            }
            if recipes[..i].contains(r) {
                return bad(format!("class {i} recipe duplicates an earlier class"));
            }
        }
        Ok(())
    }

    pub fn class_name(k: usize) -> String {
        format!("class{k}")
    }

    pub fn column_names(&self) -> Vec<Vec<String>> {
        (0..self.clusters)
            .map(|j| (0..self.dims).map(|d| format!("c{j}_{}", AXES[d])).collect())
            .collect()
    }
}

/// Samples grouped by class, `samples_per_class` each, from one seeded stream.
///
/// Channel `m` of cluster `j` (flat index `i = j*dims + m`) of a class-`k`
/// sample is `A sin(2 pi f t / length + 2 pi i / (clusters*dims) + phase) + noise`.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Vec<SeriesSegment>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let channels = spec.clusters * spec.dims;
    let mut out = Vec::with_capacity(spec.num_classes * spec.samples_per_class);
    for (k, recipe) in spec.recipes().iter().enumerate() {
        let sigma = recipe.noise.unwrap_or(spec.noise_sigma);
        let noise = Normal::new(0.0, sigma).map_err(|e| CliError::Config(e.to_string()))?;
        for n in 0..spec.samples_per_class {
            let phase = if spec.random_phase {
                rng.random_range(0.0..TAU)
            } else {
                0.0
            };
            let data: Vec<Vec<Vec<f64>>> = (0..spec.clusters)
                .map(|j| {
                    (0..spec.dims)
                        .map(|m| {
                            let offset = TAU * (j * spec.dims + m) as f64 / channels as f64;
                            (0..spec.length)
                                .map(|t| {
                                    let arg = TAU * recipe.frequency * t as f64 / spec.length as f64;
                                    recipe.amplitude * (arg + offset + phase).sin()
                                        + noise.sample(&mut rng)
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect();
            let seg = SeriesSegment::from_nested(
                data,
                SynthSpec::class_name(k),
                format!("{}_{n:04}", SynthSpec::class_name(k)),
            )
            .map_err(|e| CliError::Data(e.to_string()))?;
            out.push(seg);
        }
    }
    Ok(out)
}

fn write_segment_csv(path: &Path, seg: &SeriesSegment, names: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let header: Vec<&str> = names.iter().flatten().map(String::as_str).collect();
    let csv_err = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
    w.write_record(&header).map_err(csv_err)?;
    let channels: Vec<&[f64]> = seg
        .clusters()
        .iter()
        .flat_map(|c| c.channels().iter().map(|ch| ch.values()))
        .collect();
    for t in 0..seg.len() {
        w.write_record(channels.iter().map(|ch| ch[t].to_string())).map_err(csv_err)?;
    }
    w.flush().map_err(CliError::io(path))
}

/// Writes one CSV per sample under `out/data` and a per-file manifest at
/// `out/manifest.json`. Returns the manifest path.
pub fn write_synthetic(spec: &SynthSpec, out: &Path) -> Result<PathBuf> {
    let segments = generate_synthetic(spec)?;
    let data_dir = out.join("data");
    create_dir(&data_dir)?;
    let names = spec.column_names();
    let mut files = Vec::with_capacity(segments.len());
    for seg in &segments {
        let rel = PathBuf::from(format!("{}.csv", seg.source_id));
        write_segment_csv(&data_dir.join(&rel), seg, &names)?;
        files.push(FileEntry {
            path: rel,
            label: Some(seg.label.clone()),
        });
    }
    let manifest = DatasetManifest {
        root: PathBuf::from("data"),
        clusters: names
            .into_iter()
            .enumerate()
            .map(|(j, columns)| ClusterSchema {
                name: format!("c{j}"),
                columns,
            })
            .collect(),
        files,
        label_column: None,
        grouping: Grouping::PerFile,
        sampling_rate: None,
    };
    let path = out.join("manifest.json");
    write_json(&path, &manifest)?;
    write_json(&out.join("synth_spec.json"), spec)?;
    Ok(path)
}
