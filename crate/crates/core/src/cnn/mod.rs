//! A small convolutional classifier for encoded images.

mod layers;
mod metrics;
mod model;
mod split;
mod tensor;
mod train;

pub use layers::{
    maxpool_backward, maxpool_forward, relu_backward, relu_forward, softmax_backward,
    softmax_forward, Conv2d, Dense,
};
pub use metrics::{ConfusionMatrix, Metrics};
pub use model::{build_model, CnnModel, Gradients, Layer, ModelConfig, CHECKPOINT_VERSION};
pub use split::{split_7_1_2, split_counts, DatasetSplit};
pub use tensor::Tensor4;
pub use train::{evaluate, predict, train, EpochStats, LabeledImages, TrainConfig, TrainReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CnnError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },
    #[error("training diverged: loss {loss} at learning rate {lr:e}")]
    Divergence { loss: f64, lr: f64 },
    #[error("dataset error: {0}")]
    Data(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
