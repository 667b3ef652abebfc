//! Batch front-end for the imaging codecs and the classifier: CSV ingestion,
//! synthetic data, PNG export with an index, training reports and
//! cross-method comparison tables.

pub mod compare;
pub mod config;
pub mod encode;
pub mod error;
pub mod manifest;
pub mod synth;
pub mod train;

pub use compare::cmd_compare;
pub use config::RunConfig;
pub use encode::{cmd_encode, encode_segments, IndexRow};
pub use error::{CliError, Result};
pub use manifest::{load_csv_dataset, DatasetManifest};
pub use synth::{generate_synthetic, write_synthetic, SynthSpec};
pub use train::{cmd_train, RunReport};
