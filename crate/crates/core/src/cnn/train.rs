use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{ConfusionMatrix, Metrics};
use super::model::CnnModel;
use super::split::DatasetSplit;
use super::tensor::Tensor4;
use super::CnnError;
use crate::raster::ImageRaster;

const EVAL_CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 32,
            lr: 0.01,
            momentum: 0.9,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), CnnError> {
        if self.batch_size == 0 {
            return Err(CnnError::Config("batch_size must be positive".into()));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(CnnError::Config(format!("bad learning rate {}", self.lr)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(CnnError::Config(format!("momentum {} not in [0, 1)", self.momentum)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    /// `None` when the validation split is empty.
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: Option<usize>,
    pub best_val_accuracy: Option<f64>,
}

/// Images stacked into one tensor, with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImages {
    pub images: Tensor4,
    pub labels: Vec<usize>,
}

impl LabeledImages {
    pub fn from_pairs(pairs: &[(ImageRaster, usize)]) -> Result<Self, CnnError> {
        let refs: Vec<&ImageRaster> = pairs.iter().map(|(img, _)| img).collect();
        Ok(Self {
            images: Tensor4::from_images(&refs)?,
            labels: pairs.iter().map(|(_, l)| *l).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Gathers the given samples, in order, into a new batch.
    pub fn gather(&self, indices: &[usize]) -> (Tensor4, Vec<usize>) {
        let s = self.images.sample_len();
        let mut data = Vec::with_capacity(indices.len() * s);
        for &i in indices {
            data.extend_from_slice(self.images.sample(i));
        }
        let t = Tensor4 {
            n: indices.len(),
            c: self.images.c,
            h: self.images.h,
            w: self.images.w,
            data,
        };
        (t, indices.iter().map(|&i| self.labels[i]).collect())
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &p) in row.iter().enumerate() {
        if p > row[best] {
            best = k;
        }
    }
    best
}

/// Most probable class for every sample. Ties go to the lower class index.
pub fn predict(model: &CnnModel, images: &Tensor4) -> Result<Vec<usize>, CnnError> {
    let mut out = Vec::with_capacity(images.n);
    let all: Vec<usize> = (0..images.n).collect();
    let set = LabeledImages {
        images: images.clone(),
        labels: vec![0; images.n],
    };
    for chunk in all.chunks(EVAL_CHUNK) {
        let (batch, _) = set.gather(chunk);
        out.extend(model.forward(&batch)?.iter().map(|r| argmax(r)));
    }
    Ok(out)
}

pub fn evaluate(model: &CnnModel, data: &LabeledImages) -> Result<Metrics, CnnError> {
    if data.is_empty() {
        return Err(CnnError::Data("cannot evaluate on an empty set".into()));
    }
    let preds = predict(model, &data.images)?;
    let confusion = ConfusionMatrix::from_pairs(
        model.num_classes(),
        data.labels.iter().copied().zip(preds),
    )?;
    Ok(confusion.into())
}

/// Mini-batch SGD with momentum for a fixed number of epochs. The training
/// order is reshuffled every epoch from a generator seeded by `config.seed`.
/// After training the model holds the parameters of the epoch with the best
/// validation accuracy (earliest on ties).
pub fn train(
    model: &mut CnnModel,
    split: &DatasetSplit<ImageRaster>,
    config: &TrainConfig,
) -> Result<TrainReport, CnnError> {
    config.validate()?;
    if config.epochs == 0 {
        return Ok(TrainReport::default());
    }
    if split.train.is_empty() {
        return Err(CnnError::Data("training split is empty".into()));
    }
    let train_set = LabeledImages::from_pairs(&split.train)?;
    let val_set = if split.val.is_empty() {
        log::warn!("validation split is empty; keeping the final epoch");
        None
    } else {
        Some(LabeledImages::from_pairs(&split.val)?)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut report = TrainReport::default();
    let mut best: Option<(f64, CnnModel)> = None;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let (batch, labels) = train_set.gather(chunk);
            let loss = model.backward_and_update(&batch, &labels, config.lr, config.momentum)?;
            loss_sum += loss * chunk.len() as f64;
        }
        let train_loss = loss_sum / train_set.len() as f64;
        let val_accuracy = match &val_set {
            Some(v) => Some(evaluate(model, v)?.accuracy),
            None => None,
        };
        log::info!(
            "epoch {epoch}/{}: train loss {train_loss:.4}, val accuracy {}",
            config.epochs,
            val_accuracy.map_or("n/a".to_string(), |a| format!("{a:.4}"))
        );
        report.epochs.push(EpochStats {
            epoch,
            train_loss,
            val_accuracy,
        });
        if let Some(acc) = val_accuracy {
            if best.as_ref().is_none_or(|(b, _)| acc > *b) {
                best = Some((acc, model.clone()));
                report.best_epoch = Some(epoch);
                report.best_val_accuracy = Some(acc);
            }
        }
    }
    if let Some((_, kept)) = best {
        *model = kept;
    } else {
        report.best_epoch = Some(config.epochs);
    }
    model.reset_velocity();
    Ok(report)
}
