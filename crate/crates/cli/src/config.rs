//! Run configuration shared by `encode` and `train`.

use std::path::{Path, PathBuf};

use dfhc_core::cnn::TrainConfig;
use dfhc_core::codec::CodecSpec;
use serde::{Deserialize, Serialize};

use crate::error::{read_json, CliError, Result};

pub const SEED_ENV: &str = "DFHC_SEED";

fn default_seed() -> u64 {
    42
}

/// Classifier and optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CnnSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    /// Filter counts of the conv stages; `None` keeps the default 8/16/32/64.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conv_channels: Option<Vec<usize>>,
}

impl Default for CnnSettings {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            epochs: t.epochs,
            batch_size: t.batch_size,
            lr: t.lr,
            momentum: t.momentum,
            conv_channels: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub codec: CodecSpec,
    /// Overrides the manifest's window length for windowed datasets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap: Option<usize>,
    /// Seeds the split, weight initialization and shuffling.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub cnn: CnnSettings,
    /// Used when no output directory is given on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(codec: CodecSpec) -> Self {
        Self {
            codec,
            window_len: None,
            overlap: None,
            seed: default_seed(),
            cnn: CnnSettings::default(),
            output_dir: None,
        }
    }

    /// Loads, applies the seed override from the environment and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let mut config: RunConfig = read_json(path)?;
        config.apply_env_seed()?;
        config.validate()?;
        Ok(config)
    }

    pub fn apply_env_seed(&mut self) -> Result<()> {
        if let Some(seed) = env_seed()? {
            self.seed = seed;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.codec.validate()?;
        self.train_config().validate()?;
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.cnn.epochs,
            batch_size: self.cnn.batch_size,
            lr: self.cnn.lr,
            momentum: self.cnn.momentum,
            seed: self.seed,
        }
    }

    /// Command-line directory first, then the configured one.
    pub fn resolve_output(&self, cli: Option<&Path>) -> Result<PathBuf> {
        cli.map(Path::to_path_buf)
            .or_else(|| self.output_dir.clone())
            .ok_or_else(|| CliError::Config("no output directory given".into()))
    }
}

/// The `DFHC_SEED` value, if set.
pub fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Config(format!("{SEED_ENV}: {e}"))),
    }
}
