//! Two-hidden-layer perceptron trained by mini-batch gradient descent on mean
//! cross-entropy.
//!
//! `h1 = relu(W1 x + b1)`, `h2 = relu(W2 h1 + b2)`, `y = softmax(W3 h2 + b3)`.
//! Weight matrices are stored row-major, one row per output unit.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::encode::InputEncoder;
use super::{ClassProbs, Classifier};
use crate::data::{LabeledDataset, PrivacyRecord, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::seed;

/// Lower clamp applied to probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden1: usize,
    pub hidden2: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden1: 32,
            hidden2: 16,
            learning_rate: 0.05,
            epochs: 30,
            batch_size: 32,
            seed: 42,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden1 == 0 || self.hidden2 == 0 || self.batch_size == 0 {
            return Err(Error::ConfigInvalid("layer sizes and batch size must be positive".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::ConfigInvalid(format!("learning rate {}", self.learning_rate)));
        }
        Ok(())
    }
}

/// Layer weights and biases. Serialized with weight matrices as nested arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MlpParamsDoc", into = "MlpParamsDoc")]
pub struct MlpParams {
    pub input: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MlpParamsDoc {
    w1: Vec<Vec<f64>>,
    b1: Vec<f64>,
    w2: Vec<Vec<f64>>,
    b2: Vec<f64>,
    w3: Vec<Vec<f64>>,
    b3: Vec<f64>,
}

impl From<MlpParams> for MlpParamsDoc {
    fn from(p: MlpParams) -> Self {
        let rows = |w: &[f64], cols: usize| w.chunks(cols).map(<[f64]>::to_vec).collect();
        MlpParamsDoc {
            w1: rows(&p.w1, p.input),
            w2: rows(&p.w2, p.hidden1),
            w3: rows(&p.w3, p.hidden2),
            b1: p.b1,
            b2: p.b2,
            b3: p.b3,
        }
    }
}

impl TryFrom<MlpParamsDoc> for MlpParams {
    type Error = String;

    fn try_from(d: MlpParamsDoc) -> std::result::Result<Self, String> {
        let hidden1 = d.w1.len();
        let hidden2 = d.w2.len();
        let input = d.w1.first().map_or(0, Vec::len);
        let flat = |w: Vec<Vec<f64>>, rows: usize, cols: usize, name: &str| {
            if w.len() != rows || w.iter().any(|r| r.len() != cols) {
                Err(format!("{name} is not {rows}x{cols}"))
            } else {
                Ok(w.into_iter().flatten().collect::<Vec<f64>>())
            }
        };
        let p = MlpParams {
            input,
            hidden1,
            hidden2,
            w1: flat(d.w1, hidden1, input, "w1")?,
            w2: flat(d.w2, hidden2, hidden1, "w2")?,
            w3: flat(d.w3, NUM_CLASSES, hidden2, "w3")?,
            b1: d.b1,
            b2: d.b2,
            b3: d.b3,
        };
        if p.b1.len() != hidden1 || p.b2.len() != hidden2 || p.b3.len() != NUM_CLASSES {
            return Err("bias length mismatch".into());
        }
        Ok(p)
    }
}

impl MlpParams {
    pub fn zeros(input: usize, hidden1: usize, hidden2: usize) -> Self {
        MlpParams {
            input,
            hidden1,
            hidden2,
            w1: vec![0.0; hidden1 * input],
            b1: vec![0.0; hidden1],
            w2: vec![0.0; hidden2 * hidden1],
            b2: vec![0.0; hidden2],
            w3: vec![0.0; NUM_CLASSES * hidden2],
            b3: vec![0.0; NUM_CLASSES],
        }
    }

    /// Uniform in `[-s, s]`, `s = sqrt(6 / (fan_in + fan_out))`; zero biases.
    pub fn init(input: usize, hidden1: usize, hidden2: usize, seed: u64) -> Self {
        let mut p = Self::zeros(input, hidden1, hidden2);
        let mut rng = seed::stream(seed, "mlp_init", &[]);
        for (w, fan_in, fan_out) in [
            (&mut p.w1, input, hidden1),
            (&mut p.w2, hidden1, hidden2),
            (&mut p.w3, hidden2, NUM_CLASSES),
        ] {
            let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for x in w.iter_mut() {
                *x = rng.random_range(-s..=s);
            }
        }
        p
    }

    fn tensors(&self) -> [&Vec<f64>; 6] {
        [&self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3]
    }

    fn tensors_mut(&mut self) -> [&mut Vec<f64>; 6] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2, &mut self.w3, &mut self.b3]
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// All parameters in (w1, b1, w2, b2, w3, b3) order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|t| t.iter().copied()).collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params());
        let mut offset = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    fn axpy(&mut self, scale: f64, other: &MlpParams) {
        for (t, o) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (a, b) in t.iter_mut().zip(o.iter()) {
                *a += scale * b;
            }
        }
    }

    fn fill_zero(&mut self) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x = 0.0);
        }
    }
}

/// Activations of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub probs: ClassProbs,
}

/// Softmax with max subtraction.
pub fn softmax(logits: &[f64; NUM_CLASSES]) -> ClassProbs {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps = logits.map(|z| (z - max).exp());
    let sum: f64 = exps.iter().sum();
    exps.map(|e| e / sum)
}

fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (j, o) in out.iter_mut().enumerate() {
        let row = &w[j * cols..(j + 1) * cols];
        *o = b[j] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

pub fn mlp_forward(params: &MlpParams, x: &[f64]) -> Result<Forward> {
    if x.len() != params.input {
        return Err(Error::DimensionMismatch {
            expected: params.input,
            actual: x.len(),
        });
    }
    let mut h1 = vec![0.0; params.hidden1];
    affine(&params.w1, &params.b1, x, &mut h1);
    relu_in_place(&mut h1);
    let mut h2 = vec![0.0; params.hidden2];
    affine(&params.w2, &params.b2, &h1, &mut h2);
    relu_in_place(&mut h2);
    let mut logits = [0.0; NUM_CLASSES];
    affine(&params.w3, &params.b3, &h2, &mut logits);
    Ok(Forward {
        h1,
        h2,
        probs: softmax(&logits),
    })
}

/// `-sum_i y_i ln(max(p_i, 1e-12))`
pub fn cross_entropy(probs: &[f64], one_hot: &[f64]) -> f64 {
    -probs
        .iter()
        .zip(one_hot)
        .map(|(p, y)| if *y == 0.0 { 0.0 } else { y * p.max(PROB_FLOOR).ln() })
        .sum::<f64>()
}

fn label_loss(probs: &ClassProbs, label: usize) -> f64 {
    -probs[label].max(PROB_FLOOR).ln()
}

/// Mean cross-entropy over a batch.
pub fn batch_loss(params: &MlpParams, xs: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    for (x, &y) in xs.iter().zip(labels) {
        total += label_loss(&mlp_forward(params, x)?.probs, y);
    }
    Ok(total / xs.len() as f64)
}

/// Scratch space for backpropagation.
struct Workspace {
    z1: Vec<f64>,
    h1: Vec<f64>,
    z2: Vec<f64>,
    h2: Vec<f64>,
    dh1: Vec<f64>,
    dh2: Vec<f64>,
}

impl Workspace {
    fn new(p: &MlpParams) -> Self {
        Workspace {
            z1: vec![0.0; p.hidden1],
            h1: vec![0.0; p.hidden1],
            z2: vec![0.0; p.hidden2],
            h2: vec![0.0; p.hidden2],
            dh1: vec![0.0; p.hidden1],
            dh2: vec![0.0; p.hidden2],
        }
    }
}

/// Adds `scale * dLoss/dParams` for one sample into `grad`; returns the sample loss.
fn accumulate_sample(
    p: &MlpParams,
    x: &[f64],
    label: usize,
    scale: f64,
    grad: &mut MlpParams,
    ws: &mut Workspace,
) -> f64 {
    let (n, d1, d2) = (p.input, p.hidden1, p.hidden2);
    affine(&p.w1, &p.b1, x, &mut ws.z1);
    for j in 0..d1 {
        ws.h1[j] = ws.z1[j].max(0.0);
    }
    affine(&p.w2, &p.b2, &ws.h1, &mut ws.z2);
    for j in 0..d2 {
        ws.h2[j] = ws.z2[j].max(0.0);
    }
    let mut logits = [0.0; NUM_CLASSES];
    affine(&p.w3, &p.b3, &ws.h2, &mut logits);
    let probs = softmax(&logits);
    let loss = label_loss(&probs, label);

    // dL/dz3 = p - y
    let mut dz3 = probs;
    dz3[label] -= 1.0;
    ws.dh2.iter_mut().for_each(|v| *v = 0.0);
    for (c, &dz) in dz3.iter().enumerate() {
        let g = scale * dz;
        grad.b3[c] += g;
        let row = c * d2;
        for j in 0..d2 {
            grad.w3[row + j] += g * ws.h2[j];
            ws.dh2[j] += dz * p.w3[row + j];
        }
    }
    ws.dh1.iter_mut().for_each(|v| *v = 0.0);
    for k in 0..d2 {
        if ws.z2[k] <= 0.0 {
            continue;
        }
        let dz = ws.dh2[k];
        let g = scale * dz;
        grad.b2[k] += g;
        let row = k * d1;
        for j in 0..d1 {
            grad.w2[row + j] += g * ws.h1[j];
            ws.dh1[j] += dz * p.w2[row + j];
        }
    }
    for j in 0..d1 {
        if ws.z1[j] <= 0.0 {
            continue;
        }
        let g = scale * ws.dh1[j];
        grad.b1[j] += g;
        let row = j * n;
        for (gw, xi) in grad.w1[row..row + n].iter_mut().zip(x) {
            *gw += g * xi;
        }
    }
    loss
}

/// Gradient of the mean batch cross-entropy, by backpropagation.
pub fn batch_gradient(params: &MlpParams, xs: &[Vec<f64>], labels: &[usize]) -> Result<(f64, MlpParams)> {
    let mut grad = MlpParams::zeros(params.input, params.hidden1, params.hidden2);
    let mut ws = Workspace::new(params);
    let scale = 1.0 / xs.len() as f64;
    let mut loss = 0.0;
    for (x, &y) in xs.iter().zip(labels) {
        if x.len() != params.input {
            return Err(Error::DimensionMismatch {
                expected: params.input,
                actual: x.len(),
            });
        }
        loss += accumulate_sample(params, x, y, scale, &mut grad, &mut ws);
    }
    Ok((loss * scale, grad))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub config: MlpConfig,
    pub encoder: InputEncoder,
    pub params: MlpParams,
    /// Mean mini-batch loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

fn encode_training_set(encoder: &InputEncoder, train: &LabeledDataset) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let mut xs = Vec::with_capacity(train.len());
    let mut ys = Vec::with_capacity(train.len());
    for r in &train.records {
        let y = r.label.ok_or(Error::MissingLabel { record_id: r.record_id })?;
        xs.push(encoder.encode(r));
        ys.push(y.index());
    }
    Ok((xs, ys))
}

pub fn mlp_train(cfg: &MlpConfig, train: &LabeledDataset) -> Result<MlpModel> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let encoder = InputEncoder::from_schema(&train.schema);
    let (xs, ys) = encode_training_set(&encoder, train)?;
    let mut params = MlpParams::init(encoder.width(), cfg.hidden1, cfg.hidden2, cfg.seed);
    let mut grad = MlpParams::zeros(params.input, params.hidden1, params.hidden2);
    let mut ws = Workspace::new(&params);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut rng = seed::stream(cfg.seed, "mlp_shuffle", &[epoch as u64]);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for (batch, chunk) in order.chunks(cfg.batch_size).enumerate() {
            grad.fill_zero();
            let scale = 1.0 / chunk.len() as f64;
            let mut loss = 0.0;
            for &i in chunk {
                loss += accumulate_sample(&params, &xs[i], ys[i], scale, &mut grad, &mut ws);
            }
            loss *= scale;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch });
            }
            params.axpy(-cfg.learning_rate, &grad);
            if !params.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch });
            }
            epoch_loss += loss;
            batches += 1;
        }
        epoch_losses.push(epoch_loss / batches as f64);
    }

    Ok(MlpModel {
        config: cfg.clone(),
        encoder,
        params,
        epoch_losses,
    })
}

impl MlpModel {
    /// Mean cross-entropy of the current parameters over a labeled dataset.
    pub fn dataset_loss(&self, ds: &LabeledDataset) -> Result<f64> {
        let (xs, ys) = encode_training_set(&self.encoder, ds)?;
        batch_loss(&self.params, &xs, &ys)
    }
}

impl Classifier for MlpModel {
    fn predict_proba(&self, record: &PrivacyRecord) -> ClassProbs {
        let x = self.encoder.encode(record);
        mlp_forward(&self.params, &x).expect("encoder width matches params").probs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_params_give_uniform_output() {
        let p = MlpParams::zeros(4, 3, 2);
        let f = mlp_forward(&p, &[0.3, -1.0, 2.0, 0.0]).unwrap();
        assert!(f.h1.iter().chain(&f.h2).all(|v| *v == 0.0));
        for q in f.probs {
            assert!((q - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_is_shift_invariant_and_overflow_safe() {
        let base = softmax(&[0.5, -1.0, 2.0]);
        let shifted = softmax(&[1000.5, 999.0, 1002.0]);
        for (a, b) in base.iter().zip(shifted) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(shifted.iter().all(|p| p.is_finite()));
    }

    #[test]
    fn cross_entropy_values() {
        assert_eq!(cross_entropy(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]), 0.0);
        let uniform = [1.0 / 3.0; 3];
        assert!((cross_entropy(&uniform, &[0.0, 1.0, 0.0]) - 3f64.ln()).abs() < 1e-12);
        assert!((cross_entropy(&uniform, &[0.0, 1.0, 0.0]) - 1.098612).abs() < 1e-6);
        // clamped: finite even for a zero on the true class
        assert!(cross_entropy(&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0]).is_finite());
    }

    #[test]
    fn dimension_mismatch() {
        let p = MlpParams::zeros(4, 3, 2);
        assert!(matches!(
            mlp_forward(&p, &[1.0]),
            Err(Error::DimensionMismatch { expected: 4, actual: 1 })
        ));
    }

    #[test]
    fn flat_round_trip_and_json_nesting() {
        let p = MlpParams::init(5, 4, 3, 9);
        let mut q = MlpParams::zeros(5, 4, 3);
        q.set_flat(&p.to_flat());
        assert_eq!(p, q);
        let json = serde_json::to_value(&p).unwrap();
        assert_eq!(json["w1"].as_array().unwrap().len(), 4);
        assert_eq!(json["w1"][0].as_array().unwrap().len(), 5);
        let back: MlpParams = serde_json::from_value(json).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn init_respects_fan_bounds() {
        let p = MlpParams::init(12, 32, 16, 1);
        let s1 = (6.0f64 / 44.0).sqrt();
        assert!(p.w1.iter().all(|w| w.abs() <= s1));
        assert!(p.b1.iter().all(|b| *b == 0.0));
    }
}
