//! Fixed-architecture evaluation classifier.
//!
//! 384 → 64 → 16 → 4 → C, tanh on the hidden layers, softmax on the output,
//! mean cross-entropy loss, trained with mini-batch Adam. Backpropagation is
//! written out by hand; the tests check it against central differences.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::EMBEDDING_DIM;
use crate::rng::RngStream;

/// Input and hidden widths. The output width is the class count.
pub const HIDDEN_DIMS: [usize; 3] = [64, 16, 4];

/// Probabilities are clamped to this before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

const MODEL_FORMAT: &str = "augtext-mlp";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("class {0} has no training examples")]
    EmptyClass(usize),
    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },
    #[error("input has dimension {got}, expected {EMBEDDING_DIM}")]
    InputDimension { got: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("loss became non-finite at epoch {epoch}, batch {batch} (last finite epoch loss {last_loss:?})")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        last_loss: Option<f64>,
    },
    #[error("model file {path}: {reason}")]
    ModelFile { path: String, reason: String },
}

/// Maps label strings to class indices in sorted order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    names: Vec<String>,
}

impl LabelMap {
    /// Sorts and deduplicates `labels`.
    pub fn new<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names: Vec<String> = labels.into_iter().map(Into::into).collect();
        names.sort();
        names.dedup();
        Self { names }
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.names.binary_search_by(|n| n.as_str().cmp(label)).ok()
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// A dense layer. `weights` is `n_out × n_in`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            bias: vec![0.0; n_out],
        }
    }

    /// Weight matrix shape as (rows, cols) = (n_out, n_in).
    pub fn shape(&self) -> (usize, usize) {
        (self.n_out, self.n_in)
    }

    /// Like `apply` for an input given as (index, value) pairs; the other
    /// entries are zero. Sentence embeddings from hashed encoders are
    /// mostly zeros.
    fn apply_sparse(&self, input: &[(usize, f64)], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.n_in)
                .zip(&self.bias)
                .map(|(row, b)| b + input.iter().map(|&(i, x)| row[i] * x).sum::<f64>()),
        );
    }

    fn apply(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.n_in)
                .zip(&self.bias)
                .map(|(row, b)| b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>()),
        );
    }
}

/// Weights and biases for the four dense layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    layers: Vec<Layer>,
}

impl MlpParams {
    /// All-zero parameters for `num_classes` outputs.
    pub fn zeros(num_classes: usize) -> Result<Self, ClassifierError> {
        if num_classes < 2 {
            return Err(ClassifierError::TooFewClasses(num_classes));
        }
        let dims = layer_dims(num_classes);
        Ok(Self {
            layers: dims.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        })
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.n_out)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Every parameter, layer by layer, weights before biases.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
    }

    /// Mutable access in the same order as [`values`](Self::values).
    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(f64::is_finite)
    }

    fn validate_shape(&self) -> Result<(), String> {
        let c = self.num_classes();
        if c < 2 {
            return Err(format!("output width {c} < 2"));
        }
        let dims = layer_dims(c);
        if self.layers.len() != dims.len() - 1 {
            return Err(format!(
                "expected {} layers, found {}",
                dims.len() - 1,
                self.layers.len()
            ));
        }
        for (i, (l, w)) in self.layers.iter().zip(dims.windows(2)).enumerate() {
            if l.n_in != w[0] || l.n_out != w[1] || l.weights.len() != w[0] * w[1] || l.bias.len() != w[1] {
                return Err(format!("layer {i} has wrong shape"));
            }
        }
        if !self.is_finite() {
            return Err("non-finite parameter".into());
        }
        Ok(())
    }
}

fn layer_dims(num_classes: usize) -> [usize; 5] {
    [
        EMBEDDING_DIM,
        HIDDEN_DIMS[0],
        HIDDEN_DIMS[1],
        HIDDEN_DIMS[2],
        num_classes,
    ]
}

/// Xavier-uniform weights, zero biases.
pub fn init_params(num_classes: usize, seed: u64) -> Result<MlpParams, ClassifierError> {
    let mut params = MlpParams::zeros(num_classes)?;
    let mut rng = RngStream::derive(seed, "init_params", 0);
    for layer in &mut params.layers {
        let limit = (6.0 / (layer.n_in + layer.n_out) as f64).sqrt();
        for w in &mut layer.weights {
            *w = rng.random_range(-limit..limit);
        }
    }
    Ok(params)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: &str| Err(ClassifierError::InvalidConfig(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must be in [0, 1)");
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad("epsilon must be positive");
        }
        Ok(())
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

fn check_input(x: &[f64]) {
    assert_eq!(
        x.len(),
        EMBEDDING_DIM,
        "classifier input must be {EMBEDDING_DIM}-dimensional"
    );
}

/// Per-layer outputs for one example: hidden activations after tanh, then
/// raw logits.
struct Trace {
    outputs: Vec<Vec<f64>>,
}

fn nonzeros(x: &[f64]) -> Vec<(usize, f64)> {
    x.iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(i, &v)| (i, v))
        .collect()
}

fn trace(p: &MlpParams, x: &[f64]) -> Trace {
    let mut outputs = Vec::with_capacity(p.layers.len());
    let mut input: &[f64] = x;
    let last = p.layers.len() - 1;
    for (i, layer) in p.layers.iter().enumerate() {
        let mut out = Vec::with_capacity(layer.n_out);
        if i == 0 {
            layer.apply_sparse(&nonzeros(x), &mut out);
        } else {
            layer.apply(input, &mut out);
        }
        if i < last {
            out.iter_mut().for_each(|v| *v = v.tanh());
        }
        outputs.push(out);
        input = outputs.last().expect("just pushed");
    }
    Trace { outputs }
}

/// Raw output logits.
pub fn logits(p: &MlpParams, x: impl AsRef<[f64]>) -> Vec<f64> {
    let x = x.as_ref();
    check_input(x);
    trace(p, x).outputs.pop().expect("at least one layer")
}

/// Class probabilities.
pub fn forward(p: &MlpParams, x: impl AsRef<[f64]>) -> Vec<f64> {
    let mut z = logits(p, x);
    softmax_in_place(&mut z);
    z
}

/// Arg-max class; ties go to the lowest index.
pub fn predict(p: &MlpParams, x: impl AsRef<[f64]>) -> usize {
    let probs = forward(p, x);
    let mut best = 0;
    for (i, &v) in probs.iter().enumerate().skip(1) {
        if v > probs[best] {
            best = i;
        }
    }
    best
}

/// Cross-entropy from logits via log-sum-exp.
fn cross_entropy_from_logits(z: &[f64], label: usize) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    lse - z[label]
}

/// Mean cross-entropy over a batch.
pub fn mean_loss<V: AsRef<[f64]>>(p: &MlpParams, batch: &[(V, usize)]) -> f64 {
    let total: f64 = batch
        .iter()
        .map(|(x, y)| cross_entropy_from_logits(&logits(p, x.as_ref()), *y))
        .sum();
    total / batch.len() as f64
}

/// Mean cross-entropy over a batch and its gradient with respect to every
/// parameter, shaped like `p`.
pub fn loss_and_gradient<V: AsRef<[f64]>>(p: &MlpParams, batch: &[(V, usize)]) -> (f64, MlpParams) {
    let mut grad = MlpParams {
        layers: p.layers.iter().map(|l| Layer::zeros(l.n_in, l.n_out)).collect(),
    };
    let mut loss = 0.0;
    let n_layers = p.layers.len();
    for (x, label) in batch {
        let x = x.as_ref();
        check_input(x);
        let t = trace(p, x);
        let nz = nonzeros(x);
        let logits = &t.outputs[n_layers - 1];
        loss += cross_entropy_from_logits(logits, *label);

        // dL/dz at the output: softmax - onehot
        let mut delta = logits.clone();
        softmax_in_place(&mut delta);
        delta[*label] -= 1.0;

        for li in (0..n_layers).rev() {
            let layer = &p.layers[li];
            let input: &[f64] = if li == 0 { x } else { &t.outputs[li - 1] };
            let g = &mut grad.layers[li];
            for (o, &d) in delta.iter().enumerate() {
                g.bias[o] += d;
                let row = &mut g.weights[o * layer.n_in..(o + 1) * layer.n_in];
                if li == 0 {
                    for &(i, xi) in &nz {
                        row[i] += d * xi;
                    }
                } else {
                    row.iter_mut().zip(input).for_each(|(gw, xi)| *gw += d * xi);
                }
            }
            if li > 0 {
                // back through the weights, then through tanh (1 - a^2)
                let mut prev = vec![0.0; layer.n_in];
                for (o, &d) in delta.iter().enumerate() {
                    let row = &layer.weights[o * layer.n_in..(o + 1) * layer.n_in];
                    prev.iter_mut().zip(row).for_each(|(pv, w)| *pv += w * d);
                }
                prev.iter_mut().zip(input).for_each(|(pv, a)| *pv *= 1.0 - a * a);
                delta = prev;
            }
        }
    }
    let scale = 1.0 / batch.len() as f64;
    grad.values_mut().for_each(|g| *g *= scale);
    (loss * scale, grad)
}

fn check_training_set<V: AsRef<[f64]>>(data: &[(V, usize)], num_classes: usize) -> Result<(), ClassifierError> {
    if num_classes < 2 {
        return Err(ClassifierError::TooFewClasses(num_classes));
    }
    if data.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    let mut counts = vec![0usize; num_classes];
    for (x, y) in data {
        let len = x.as_ref().len();
        if len != EMBEDDING_DIM {
            return Err(ClassifierError::InputDimension { got: len });
        }
        if *y >= num_classes {
            return Err(ClassifierError::LabelOutOfRange { label: *y, num_classes });
        }
        counts[*y] += 1;
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(ClassifierError::EmptyClass(c));
    }
    Ok(())
}

/// Trained parameters plus the mean training loss of each epoch.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: MlpParams,
    pub epoch_losses: Vec<f64>,
}

/// Mini-batch Adam on mean cross-entropy. Every class in `0..num_classes`
/// must have at least one example. Deterministic in (data, cfg).
pub fn train<V: AsRef<[f64]>>(
    data: &[(V, usize)],
    num_classes: usize,
    cfg: &TrainConfig,
) -> Result<MlpParams, ClassifierError> {
    train_with_history(data, num_classes, cfg).map(|o| o.params)
}

pub fn train_with_history<V: AsRef<[f64]>>(
    data: &[(V, usize)],
    num_classes: usize,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, ClassifierError> {
    cfg.validate()?;
    check_training_set(data, num_classes)?;

    let mut params = init_params(num_classes, cfg.seed)?;
    let n = params.num_params();
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut shuffle = RngStream::derive(cfg.seed, "train_shuffle", 0);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle);
        let mut epoch_loss = 0.0;
        for (bi, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<(&[f64], usize)> = chunk.iter().map(|&i| (data[i].0.as_ref(), data[i].1)).collect();
            let (loss, grad) = loss_and_gradient(&params, &batch);
            if !loss.is_finite() {
                return Err(ClassifierError::NonFiniteLoss {
                    epoch,
                    batch: bi,
                    last_loss: epoch_losses.last().copied(),
                });
            }
            epoch_loss += loss * batch.len() as f64;

            step += 1;
            let bc1 = 1.0 - cfg.beta1.powi(step);
            let bc2 = 1.0 - cfg.beta2.powi(step);
            for (((p, g), m), v) in params.values_mut().zip(grad.values()).zip(&mut m).zip(&mut v) {
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
            }
        }
        epoch_losses.push(epoch_loss / data.len() as f64);
    }
    Ok(TrainOutcome { params, epoch_losses })
}

/// Fraction of examples whose arg-max prediction equals the label.
pub fn evaluate<V: AsRef<[f64]>>(p: &MlpParams, test: &[(V, usize)]) -> Result<f64, ClassifierError> {
    if test.is_empty() {
        return Err(ClassifierError::EmptyTestSet);
    }
    let correct = test.iter().filter(|(x, y)| predict(p, x.as_ref()) == *y).count();
    Ok(correct as f64 / test.len() as f64)
}

/// Cross-entropy of each item, `-ln(max(p_label, 1e-12))`.
pub fn per_example_loss<V: AsRef<[f64]>>(p: &MlpParams, items: &[(V, usize)]) -> Vec<f64> {
    items
        .iter()
        .map(|(x, y)| {
            let probs = forward(p, x.as_ref());
            -probs[*y].max(PROB_FLOOR).ln()
        })
        .collect()
}

/// A trained model together with its class names (index order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub format: String,
    pub version: u32,
    pub labels: Vec<String>,
    pub params: MlpParams,
}

impl SavedModel {
    pub fn new(labels: Vec<String>, params: MlpParams) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            labels,
            params,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ClassifierError> {
        let path = path.as_ref();
        let err = |reason: String| ClassifierError::ModelFile {
            path: path.display().to_string(),
            reason,
        };
        let json = serde_json::to_string(self).map_err(|e| err(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| err(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ClassifierError> {
        let path = path.as_ref();
        let err = |reason: String| ClassifierError::ModelFile {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let model: SavedModel = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        if model.format != MODEL_FORMAT {
            return Err(err(format!("unexpected format {:?}", model.format)));
        }
        if model.version != MODEL_VERSION {
            return Err(err(format!("unsupported version {}", model.version)));
        }
        model.params.validate_shape().map_err(err)?;
        if model.labels.len() != model.params.num_classes() {
            return Err(err(format!(
                "{} labels for {} outputs",
                model.labels.len(),
                model.params.num_classes()
            )));
        }
        Ok(model)
    }
}
