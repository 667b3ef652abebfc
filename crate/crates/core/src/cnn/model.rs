use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{
    maxpool_backward, maxpool_forward, relu_backward, relu_forward, softmax_forward, Conv2d, Dense,
};
use super::tensor::Tensor4;
use super::CnnError;

pub const CHECKPOINT_FORMAT: &str = "dfhc-cnn";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Architecture hyperparameters. Each entry of `conv_channels` adds a
/// conv + ReLU + 2x2 max-pool stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_size: usize,
    pub in_channels: usize,
    pub num_classes: usize,
    pub conv_channels: Vec<usize>,
    pub kernel: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub const DEFAULT_CONV_CHANNELS: [usize; 4] = [8, 16, 32, 64];

    pub fn new(input_size: usize, in_channels: usize, num_classes: usize, seed: u64) -> Self {
        Self {
            input_size,
            in_channels,
            num_classes,
            conv_channels: Self::DEFAULT_CONV_CHANNELS.to_vec(),
            kernel: 3,
            seed,
        }
    }

    /// Spatial side after all pooling stages.
    pub fn final_side(&self) -> usize {
        self.input_size >> self.conv_channels.len()
    }

    /// Width of the flattened features feeding the dense head.
    pub fn flat_features(&self) -> usize {
        let last = self.conv_channels.last().copied().unwrap_or(self.in_channels);
        last * self.final_side() * self.final_side()
    }

    fn validate(&self) -> Result<(), CnnError> {
        let stages = self.conv_channels.len() as u32;
        let block = 1usize << stages;
        if self.input_size == 0 || !self.input_size.is_multiple_of(block) {
            return Err(CnnError::Config(format!(
                "input size {} is not divisible by 2^{stages}",
                self.input_size
            )));
        }
        if self.in_channels != 1 && self.in_channels != 3 {
            return Err(CnnError::Config(format!(
                "in_channels must be 1 or 3, got {}",
                self.in_channels
            )));
        }
        if self.num_classes < 2 {
            return Err(CnnError::Config("need at least 2 classes".into()));
        }
        if self.kernel.is_multiple_of(2) || self.conv_channels.contains(&0) {
            return Err(CnnError::Config("kernel must be odd and widths positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layer {
    Conv(Conv2d),
    Relu,
    MaxPool,
    Dense(Dense),
    Softmax,
}

impl Layer {
    fn forward(&self, x: &Tensor4) -> Tensor4 {
        match self {
            Layer::Conv(c) => c.forward(x),
            Layer::Relu => relu_forward(x),
            Layer::MaxPool => maxpool_forward(x),
            Layer::Dense(d) => d.forward(x),
            Layer::Softmax => softmax_forward(x),
        }
    }
}

/// Gradients for every parameter, laid out like [`CnnModel::parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Vec<f64>>);

#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    config: ModelConfig,
    layers: Vec<Layer>,
    velocity: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    config: ModelConfig,
    layers: Vec<Layer>,
}

/// The default classifier: four conv(3x3, same) + ReLU + pool stages with
/// 8/16/32/64 filters, then a dense softmax head. Inputs must be 32 or 64.
pub fn build_model(
    input_size: usize,
    in_channels: usize,
    num_classes: usize,
    seed: u64,
) -> Result<CnnModel, CnnError> {
    if input_size != 32 && input_size != 64 {
        return Err(CnnError::Config(format!(
            "input size must be 32 or 64, got {input_size}"
        )));
    }
    CnnModel::from_config(ModelConfig::new(input_size, in_channels, num_classes, seed))
}

impl CnnModel {
    pub fn from_config(config: ModelConfig) -> Result<Self, CnnError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut layers = Vec::new();
        let mut channels = config.in_channels;
        for &width in &config.conv_channels {
            layers.push(Layer::Conv(Conv2d::he_uniform(channels, width, config.kernel, &mut rng)));
            layers.push(Layer::Relu);
            layers.push(Layer::MaxPool);
            channels = width;
        }
        layers.push(Layer::Dense(Dense::he_uniform(
            config.flat_features(),
            config.num_classes,
            &mut rng,
        )));
        layers.push(Layer::Softmax);
        Ok(Self::assemble(config, layers))
    }

    fn assemble(config: ModelConfig, layers: Vec<Layer>) -> Self {
        let mut model = Self {
            config,
            layers,
            velocity: Vec::new(),
        };
        model.velocity = model.parameters().iter().map(|p| vec![0.0; p.len()]).collect();
        model
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    /// Parameter blocks in layer order: weight then bias for each conv/dense layer.
    pub fn parameters(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| match l {
                Layer::Conv(c) => vec![c.weight.as_slice(), c.bias.as_slice()],
                Layer::Dense(d) => vec![d.weight.as_slice(), d.bias.as_slice()],
                _ => vec![],
            })
            .collect()
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Vec<f64>> {
        self.layers
            .iter_mut()
            .flat_map(|l| match l {
                Layer::Conv(c) => vec![&mut c.weight, &mut c.bias],
                Layer::Dense(d) => vec![&mut d.weight, &mut d.bias],
                _ => vec![],
            })
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    fn check_batch(&self, batch: &Tensor4) -> Result<(), CnnError> {
        let c = &self.config;
        if (batch.c, batch.h, batch.w) != (c.in_channels, c.input_size, c.input_size) {
            return Err(CnnError::Shape(format!(
                "batch {}x{}x{} does not match model input {}x{}x{}",
                batch.c, batch.h, batch.w, c.in_channels, c.input_size, c.input_size
            )));
        }
        Ok(())
    }

    /// Inputs to every layer, plus the final output.
    fn activations(&self, batch: &Tensor4) -> Vec<Tensor4> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(batch.clone());
        for layer in &self.layers {
            let next = layer.forward(acts.last().expect("non-empty"));
            acts.push(next);
        }
        acts
    }

    /// Class probabilities, one row per sample.
    pub fn forward(&self, batch: &Tensor4) -> Result<Vec<Vec<f64>>, CnnError> {
        self.check_batch(batch)?;
        let out = self.activations(batch).pop().expect("non-empty");
        Ok(out.data.chunks(self.config.num_classes).map(<[f64]>::to_vec).collect())
    }

    /// Mean cross-entropy of the batch.
    pub fn loss(&self, batch: &Tensor4, labels: &[usize]) -> Result<f64, CnnError> {
        let probs = self.forward(batch)?;
        self.check_labels(batch, labels)?;
        Ok(cross_entropy(&probs, labels))
    }

    fn check_labels(&self, batch: &Tensor4, labels: &[usize]) -> Result<(), CnnError> {
        if labels.len() != batch.n {
            return Err(CnnError::Shape(format!(
                "{} labels for a batch of {}",
                labels.len(),
                batch.n
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= self.config.num_classes) {
            return Err(CnnError::Label {
                label: bad,
                classes: self.config.num_classes,
            });
        }
        Ok(())
    }

    /// Loss and exact gradients of the mean cross-entropy.
    ///
    /// The softmax head and the loss are differentiated together, which
    /// gives `(p - onehot) / batch` at the logits.
    pub fn loss_and_gradients(
        &self,
        batch: &Tensor4,
        labels: &[usize],
    ) -> Result<(f64, Gradients), CnnError> {
        self.check_batch(batch)?;
        self.check_labels(batch, labels)?;
        let acts = self.activations(batch);
        let probs = acts.last().expect("non-empty");
        let k = self.config.num_classes;
        let rows: Vec<Vec<f64>> = probs.data.chunks(k).map(<[f64]>::to_vec).collect();
        let loss = cross_entropy(&rows, labels);

        let n = batch.n as f64;
        let mut grad = probs.clone();
        for (row, &label) in grad.data.chunks_mut(k).zip(labels) {
            row[label] -= 1.0;
            row.iter_mut().for_each(|g| *g /= n);
        }

        let mut blocks: Vec<Vec<f64>> = Vec::new();
        let last = self.layers.len() - 1;
        debug_assert!(matches!(self.layers[last], Layer::Softmax));
        for (idx, layer) in self.layers[..last].iter().enumerate().rev() {
            let input = &acts[idx];
            grad = match layer {
                Layer::Conv(c) => {
                    let (dx, dw, db) = c.backward(input, &grad);
                    blocks.push(db);
                    blocks.push(dw);
                    dx
                }
                Layer::Dense(d) => {
                    let (dx, dw, db) = d.backward(input, &grad);
                    blocks.push(db);
                    blocks.push(dw);
                    dx
                }
                Layer::Relu => relu_backward(input, &grad),
                Layer::MaxPool => maxpool_backward(input, &grad),
                Layer::Softmax => super::layers::softmax_backward(input, &grad),
            };
        }
        blocks.reverse();
        Ok((loss, Gradients(blocks)))
    }

    /// One SGD-with-momentum step: `v = momentum * v - lr * g; p += v`.
    /// Returns the loss measured before the update.
    pub fn backward_and_update(
        &mut self,
        batch: &Tensor4,
        labels: &[usize],
        lr: f64,
        momentum: f64,
    ) -> Result<f64, CnnError> {
        let (loss, grads) = self.loss_and_gradients(batch, labels)?;
        if !loss.is_finite() || grads.0.iter().flatten().any(|g| !g.is_finite()) {
            return Err(CnnError::Divergence { loss, lr });
        }
        let mut velocity = std::mem::take(&mut self.velocity);
        for ((param, vel), grad) in self.parameters_mut().into_iter().zip(&mut velocity).zip(&grads.0) {
            for ((p, v), g) in param.iter_mut().zip(vel.iter_mut()).zip(grad) {
                *v = momentum * *v - lr * g;
                *p += *v;
            }
        }
        self.velocity = velocity;
        Ok(loss)
    }

    /// Clears optimizer momentum.
    pub fn reset_velocity(&mut self) {
        self.velocity.iter_mut().flatten().for_each(|v| *v = 0.0);
    }

    pub fn to_json(&self) -> Result<String, CnnError> {
        let ckpt = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            layers: self.layers.clone(),
        };
        Ok(serde_json::to_string(&ckpt)?)
    }

    pub fn from_json(json: &str) -> Result<Self, CnnError> {
        let ckpt: Checkpoint = serde_json::from_str(json)?;
        if ckpt.format != CHECKPOINT_FORMAT || ckpt.version != CHECKPOINT_VERSION {
            return Err(CnnError::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                ckpt.format, ckpt.version
            )));
        }
        ckpt.config.validate()?;
        let reference = CnnModel::from_config(ckpt.config.clone())?;
        let same_shape = reference.layers.len() == ckpt.layers.len()
            && reference
                .parameters()
                .iter()
                .zip(Self::assemble(ckpt.config.clone(), ckpt.layers.clone()).parameters())
                .all(|(a, b)| a.len() == b.len());
        if !same_shape {
            return Err(CnnError::Checkpoint("layer shapes do not match config".into()));
        }
        Ok(Self::assemble(ckpt.config, ckpt.layers))
    }

    pub fn save(&self, path: &Path) -> Result<(), CnnError> {
        std::fs::write(path, self.to_json()?).map_err(|e| CnnError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, CnnError> {
        let json = std::fs::read_to_string(path)
            .map_err(|e| CnnError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&json)
    }
}

pub(crate) fn cross_entropy(probs: &[Vec<f64>], labels: &[usize]) -> f64 {
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(p, &l)| -p[l].max(f64::MIN_POSITIVE).ln())
        .sum();
    total / labels.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn tiny_config() -> ModelConfig {
        ModelConfig {
            input_size: 8,
            in_channels: 3,
            num_classes: 3,
            conv_channels: vec![2, 3],
            kernel: 3,
            seed: 5,
        }
    }

    fn random_batch(n: usize, c: usize, side: usize, seed: u64) -> Tensor4 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * c * side * side).map(|_| rng.random::<f64>()).collect();
        Tensor4::new(n, c, side, side, data).unwrap()
    }

    #[test]
    fn flatten_sizes() {
        let m = build_model(64, 3, 10, 1).unwrap();
        assert_eq!(m.config().final_side(), 4);
        assert_eq!(m.config().flat_features(), 1024);
        let m = build_model(32, 1, 2, 1).unwrap();
        assert_eq!(m.config().final_side(), 2);
        assert_eq!(m.config().flat_features(), 256);
        assert!(build_model(48, 3, 2, 1).is_err());
        assert!(build_model(32, 2, 2, 1).is_err());
    }

    #[test]
    fn same_seed_same_parameters() {
        let a = build_model(32, 3, 4, 99).unwrap();
        let b = build_model(32, 3, 4, 99).unwrap();
        assert_eq!(a, b);
        let c = build_model(32, 3, 4, 100).unwrap();
        assert_ne!(a.parameters(), c.parameters());
    }

    #[test]
    fn probabilities_are_distributions() {
        let m = CnnModel::from_config(tiny_config()).unwrap();
        let probs = m.forward(&random_batch(4, 3, 8, 1)).unwrap();
        for row in probs {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|p| *p > 0.0 && *p < 1.0));
        }
    }

    #[test]
    fn zero_weights_give_uniform() {
        let mut m = CnnModel::from_config(tiny_config()).unwrap();
        for p in m.parameters_mut() {
            p.iter_mut().for_each(|v| *v = 0.0);
        }
        for row in m.forward(&random_batch(2, 3, 8, 2)).unwrap() {
            assert!(row.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
        }
    }

    #[test]
    fn batch_shape_checked() {
        let m = CnnModel::from_config(tiny_config()).unwrap();
        assert!(m.forward(&random_batch(1, 1, 8, 1)).is_err());
        assert!(m.loss(&random_batch(2, 3, 8, 1), &[0]).is_err());
        assert!(matches!(
            m.loss(&random_batch(1, 3, 8, 1), &[3]),
            Err(CnnError::Label { .. })
        ));
    }

    #[test]
    fn fused_head_gradient_is_p_minus_onehot() {
        // Compare the fused logits gradient with the chain rule through
        // softmax_backward applied to dL/dp = -1/(n p_y).
        use super::super::layers::softmax_backward;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 4;
        let k = 5;
        let logits =
            Tensor4::new(n, k, 1, 1, (0..n * k).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        let labels = [0usize, 3, 4, 1];
        let p = softmax_forward(&logits);
        let mut dp = Tensor4::zeros(n, k, 1, 1);
        for (b, &l) in labels.iter().enumerate() {
            dp.data[b * k + l] = -1.0 / (n as f64 * p.data[b * k + l]);
        }
        let chained = softmax_backward(&logits, &dp);
        for (b, &l) in labels.iter().enumerate() {
            for c in 0..k {
                let onehot = if c == l { 1.0 } else { 0.0 };
                let fused = (p.data[b * k + c] - onehot) / n as f64;
                assert!((fused - chained.data[b * k + c]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn full_model_gradient_matches_finite_differences() {
        let model = CnnModel::from_config(tiny_config()).unwrap();
        let batch = random_batch(3, 3, 8, 7);
        let labels = [2, 0, 1];
        let (_, grads) = model.loss_and_gradients(&batch, &labels).unwrap();
        let eps = 1e-4;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let blocks = model.parameters().len();
        for block in 0..blocks {
            let len = model.parameters()[block].len();
            for _ in 0..6 {
                let i = rng.random_range(0..len);
                let mut plus = model.clone();
                plus.parameters_mut()[block][i] += eps;
                let mut minus = model.clone();
                minus.parameters_mut()[block][i] -= eps;
                let numeric = (plus.loss(&batch, &labels).unwrap()
                    - minus.loss(&batch, &labels).unwrap())
                    / (2.0 * eps);
                let analytic = grads.0[block][i];
                let denom = numeric.abs().max(analytic.abs()).max(1e-4);
                assert!(
                    (numeric - analytic).abs() / denom < 1e-4,
                    "block {block} idx {i}: {numeric} vs {analytic}"
                );
            }
        }
    }

    #[test]
    fn zero_lr_changes_nothing() {
        let mut m = CnnModel::from_config(tiny_config()).unwrap();
        let before = m.clone();
        let batch = random_batch(3, 3, 8, 4);
        let l1 = m.backward_and_update(&batch, &[0, 1, 2], 0.0, 0.9).unwrap();
        let l2 = m.backward_and_update(&batch, &[0, 1, 2], 0.0, 0.9).unwrap();
        assert_eq!(l1, l2);
        assert_eq!(m.parameters(), before.parameters());
    }

    #[test]
    fn small_step_descends() {
        let mut m = CnnModel::from_config(tiny_config()).unwrap();
        let batch = random_batch(6, 3, 8, 5);
        let labels = [0, 1, 2, 0, 1, 2];
        let before = m.backward_and_update(&batch, &labels, 1e-4, 0.0).unwrap();
        let after = m.loss(&batch, &labels).unwrap();
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = CnnModel::from_config(tiny_config()).unwrap();
        let json = m.to_json().unwrap();
        let back = CnnModel::from_json(&json).unwrap();
        let batch = random_batch(2, 3, 8, 6);
        assert_eq!(m.forward(&batch).unwrap(), back.forward(&batch).unwrap());
        assert_eq!(back.parameters(), m.parameters());

        let mut bad: serde_json::Value = serde_json::from_str(&json).unwrap();
        bad["version"] = 99.into();
        assert!(CnnModel::from_json(&bad.to_string()).is_err());
    }
}
