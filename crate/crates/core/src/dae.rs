//! Denoising-autoencoder pretraining and the fine-tuned classifier built on it.
//!
//! Pretraining corrupts each scaled input by zeroing a fixed number of
//! features, encodes it with `y = s(W·x̂ + b)`, decodes with
//! `z = s(W'·y + b')` and minimises the mean of `‖x − z‖²` with minibatch SGD.
//! The encoder then initialises a one-hidden-layer network whose softmax top
//! layer is trained jointly with it on cross-entropy.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::seed;
use crate::{Error, Result};

const INIT_STREAM: u64 = 1;
const SHUFFLE_PRETRAIN_STREAM: u64 = 2;
const SHUFFLE_FINETUNE_STREAM: u64 = 3;
const CORRUPTION_STREAM: u64 = 4;
/// Epoch index reserved for the fixed corruption used to report the
/// pretraining objective, so the curve compares like with like.
const EVAL_EPOCH: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct DaeParams {
    pub corruption_fraction: f64,
    pub hidden_units: usize,
    pub minibatch: usize,
    pub lr_pretrain: f64,
    pub epochs_pretrain: usize,
    pub lr_finetune: f64,
    pub epochs_finetune: usize,
    pub seed: u64,
}

impl Default for DaeParams {
    fn default() -> Self {
        Self {
            corruption_fraction: 0.3,
            hidden_units: 120,
            minibatch: 25,
            lr_pretrain: 0.9,
            epochs_pretrain: 20,
            lr_finetune: 0.9,
            epochs_finetune: 50,
            seed: 0,
        }
    }
}

impl DaeParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(alloc::format!("dae {what}")));
        if !(0.0..1.0).contains(&self.corruption_fraction) {
            return bad("corruption fraction must lie in [0, 1)");
        }
        if self.hidden_units == 0 || self.minibatch == 0 {
            return bad("hidden units and minibatch must be positive");
        }
        if !(self.lr_pretrain > 0.0 && self.lr_finetune > 0.0) {
            return bad("learning rates must be positive");
        }
        Ok(())
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// Per-feature min-max scaling onto `[0, 1]`, fitted on training data.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(batch: &[Vec<f64>]) -> Result<Self> {
        let dim = batch.first().ok_or(Error::EmptyInput)?.len();
        let mut min = vec![f64::INFINITY; dim];
        let mut max = vec![f64::NEG_INFINITY; dim];
        for row in batch {
            check_dim(dim, row.len())?;
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(Self { min, max })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// `(x − min)/(max − min)` clamped to `[0, 1]`; constant features map to 0.5.
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(x.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| {
                if hi > lo {
                    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    0.5
                }
            })
            .collect())
    }

    pub fn transform_batch(&self, batch: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        batch.iter().map(|x| self.transform(x)).collect()
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Fully connected layer, weights row-major `outputs × inputs`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Weights uniform in `±1/√inputs`, zero bias.
    pub fn random(inputs: usize, outputs: usize, rng: &mut seed::Rng) -> Self {
        let bound = 1.0 / libm::sqrt(inputs as f64);
        let weights = (0..inputs * outputs).map(|_| rng.random_range(-bound..bound)).collect();
        Self {
            weights,
            ..Self::zeros(inputs, outputs)
        }
    }

    /// `W·x + b`
    pub fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }

    pub fn sigmoid(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.affine(x);
        out.iter_mut().for_each(|v| *v = sigmoid(*v));
        out
    }

    /// Adds `scale · delta · inputᵀ` to `grad.weights` and `scale · delta` to `grad.bias`.
    fn accumulate(grad: &mut Dense, delta: &[f64], input: &[f64]) {
        for ((row, gb), &d) in grad
            .weights
            .chunks_exact_mut(grad.inputs)
            .zip(grad.bias.iter_mut())
            .zip(delta)
        {
            *gb += d;
            for (g, &x) in row.iter_mut().zip(input) {
                *g += d * x;
            }
        }
    }

    /// `Wᵀ·delta`
    fn backprop(&self, delta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.inputs];
        for (row, &d) in self.weights.chunks_exact(self.inputs).zip(delta) {
            for (o, &w) in out.iter_mut().zip(row) {
                *o += w * d;
            }
        }
        out
    }

    fn step(&mut self, grad: &Dense, lr: f64) {
        for (w, g) in self.weights.iter_mut().zip(&grad.weights) {
            *w -= lr * g;
        }
        for (b, g) in self.bias.iter_mut().zip(&grad.bias) {
            *b -= lr * g;
        }
    }

    fn scale(&mut self, factor: f64) {
        self.weights.iter_mut().for_each(|w| *w *= factor);
        self.bias.iter_mut().for_each(|b| *b *= factor);
    }

    fn parameters(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(&self.bias)
    }

    fn parameters_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.bias.iter_mut())
    }
}

/// Zeroes exactly `round(fraction × dim)` features of every sample. The choice
/// for sample `i` depends only on `(seed, epoch, i)`.
pub fn corrupt(batch: &[Vec<f64>], fraction: f64, seed: u64, epoch: u64) -> Vec<Vec<f64>> {
    batch
        .iter()
        .enumerate()
        .map(|(i, x)| corrupt_sample(x, fraction, seed, epoch, i as u64))
        .collect()
}

fn corrupt_sample(x: &[f64], fraction: f64, seed: u64, epoch: u64, index: u64) -> Vec<f64> {
    let count = libm::round(fraction * x.len() as f64) as usize;
    let mut out = x.to_vec();
    if count == 0 {
        return out;
    }
    let mut rng = seed::rng_at(seed, &[CORRUPTION_STREAM, epoch, index]);
    for j in rand::seq::index::sample(&mut rng, x.len(), count) {
        out[j] = 0.0;
    }
    out
}

/// Encoder `θ = {W, b}` and decoder `θ' = {W', b'}` (untied).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Autoencoder {
    pub encoder: Dense,
    pub decoder: Dense,
}

impl Autoencoder {
    pub fn new(input_dim: usize, hidden: usize, rng: &mut seed::Rng) -> Self {
        let encoder = Dense::random(input_dim, hidden, rng);
        let decoder = Dense::random(hidden, input_dim, rng);
        Self { encoder, decoder }
    }

    pub fn reconstruct(&self, x: &[f64]) -> Vec<f64> {
        self.decoder.sigmoid(&self.encoder.sigmoid(x))
    }

    /// Mean of `‖target − z‖²` over the batch, where `z` reconstructs `input`.
    pub fn loss(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> f64 {
        let total: f64 = inputs
            .iter()
            .zip(targets)
            .map(|(x, t)| {
                self.reconstruct(x)
                    .iter()
                    .zip(t)
                    .map(|(z, f)| (z - f) * (z - f))
                    .sum::<f64>()
            })
            .sum();
        total / inputs.len() as f64
    }

    /// Loss and its gradient, in the layout of `self`.
    pub fn loss_and_grad(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> (f64, Autoencoder) {
        let mut grad = Autoencoder {
            encoder: Dense::zeros(self.encoder.inputs, self.encoder.outputs),
            decoder: Dense::zeros(self.decoder.inputs, self.decoder.outputs),
        };
        let mut total = 0.0;
        for (x, t) in inputs.iter().zip(targets) {
            let y = self.encoder.sigmoid(x);
            let z = self.decoder.sigmoid(&y);
            let mut delta_out = Vec::with_capacity(z.len());
            for (&zj, &fj) in z.iter().zip(t) {
                let e = zj - fj;
                total += e * e;
                delta_out.push(2.0 * e * zj * (1.0 - zj));
            }
            Dense::accumulate(&mut grad.decoder, &delta_out, &y);
            let delta_hidden: Vec<f64> = self
                .decoder
                .backprop(&delta_out)
                .iter()
                .zip(&y)
                .map(|(g, &yk)| g * yk * (1.0 - yk))
                .collect();
            Dense::accumulate(&mut grad.encoder, &delta_hidden, x);
        }
        let n = inputs.len() as f64;
        grad.encoder.scale(1.0 / n);
        grad.decoder.scale(1.0 / n);
        (total / n, grad)
    }

    /// Flattened parameters: W, b, W', b'.
    pub fn parameters(&self) -> Vec<f64> {
        self.encoder
            .parameters()
            .chain(self.decoder.parameters())
            .copied()
            .collect()
    }

    pub fn set_parameters(&mut self, values: &[f64]) {
        for (p, v) in self
            .encoder
            .parameters_mut()
            .chain(self.decoder.parameters_mut())
            .zip(values)
        {
            *p = *v;
        }
    }

    fn step(&mut self, grad: &Autoencoder, lr: f64) {
        self.encoder.step(&grad.encoder, lr);
        self.decoder.step(&grad.decoder, lr);
    }
}

/// Result of unsupervised pretraining.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pretrained {
    pub autoencoder: Autoencoder,
    /// Objective before training, then after each epoch.
    pub loss_curve: Vec<f64>,
}

fn minibatches(n: usize, size: usize, rng: &mut seed::Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(size).map(<[usize]>::to_vec).collect()
}

fn gather(rows: &[Vec<f64>], idx: &[usize]) -> Vec<Vec<f64>> {
    idx.iter().map(|&i| rows[i].clone()).collect()
}

/// Minibatch SGD on the denoising reconstruction objective. `train` must
/// already be scaled to `[0, 1]`.
pub fn pretrain(train: &[Vec<f64>], params: &DaeParams) -> Result<Pretrained> {
    params.validate()?;
    let dim = train.first().ok_or(Error::EmptyInput)?.len();
    for row in train {
        check_dim(dim, row.len())?;
    }
    let mut init = seed::rng_at(params.seed, &[INIT_STREAM]);
    let mut ae = Autoencoder::new(dim, params.hidden_units, &mut init);
    let eval_inputs = corrupt(train, params.corruption_fraction, params.seed, EVAL_EPOCH);
    let mut curve = vec![ae.loss(&eval_inputs, train)];
    for epoch in 0..params.epochs_pretrain {
        let corrupted = corrupt(train, params.corruption_fraction, params.seed, epoch as u64);
        let mut rng = seed::rng_at(params.seed, &[SHUFFLE_PRETRAIN_STREAM, epoch as u64]);
        for batch in minibatches(train.len(), params.minibatch, &mut rng) {
            let (loss, grad) = ae.loss_and_grad(&gather(&corrupted, &batch), &gather(train, &batch));
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            ae.step(&grad, params.lr_pretrain);
        }
        let loss = ae.loss(&eval_inputs, train);
        if !loss.is_finite() || ae.parameters().iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch });
        }
        curve.push(loss);
    }
    Ok(Pretrained {
        autoencoder: ae,
        loss_curve: curve,
    })
}

/// Sigmoid hidden layer topped by a softmax layer.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Network {
    pub hidden: Dense,
    pub top: Dense,
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| libm::exp(l - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn log_softmax_at(logits: &[f64], k: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + libm::log(logits.iter().map(|l| libm::exp(l - max)).sum::<f64>());
    logits[k] - lse
}

impl Network {
    pub fn classes(&self) -> usize {
        self.top.outputs
    }

    pub fn input_dim(&self) -> usize {
        self.hidden.inputs
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.top.affine(&self.hidden.sigmoid(x)))
    }

    /// Mean cross-entropy.
    pub fn loss(&self, inputs: &[Vec<f64>], labels: &[usize]) -> f64 {
        let total: f64 = inputs
            .iter()
            .zip(labels)
            .map(|(x, &k)| -log_softmax_at(&self.top.affine(&self.hidden.sigmoid(x)), k))
            .sum();
        total / inputs.len() as f64
    }

    pub fn loss_and_grad(&self, inputs: &[Vec<f64>], labels: &[usize]) -> (f64, Network) {
        let mut grad = Network {
            hidden: Dense::zeros(self.hidden.inputs, self.hidden.outputs),
            top: Dense::zeros(self.top.inputs, self.top.outputs),
        };
        let mut total = 0.0;
        for (x, &k) in inputs.iter().zip(labels) {
            let h = self.hidden.sigmoid(x);
            let logits = self.top.affine(&h);
            total -= log_softmax_at(&logits, k);
            let mut delta_top = softmax(&logits);
            delta_top[k] -= 1.0;
            Dense::accumulate(&mut grad.top, &delta_top, &h);
            let delta_hidden: Vec<f64> = self
                .top
                .backprop(&delta_top)
                .iter()
                .zip(&h)
                .map(|(g, &hk)| g * hk * (1.0 - hk))
                .collect();
            Dense::accumulate(&mut grad.hidden, &delta_hidden, x);
        }
        let n = inputs.len() as f64;
        grad.hidden.scale(1.0 / n);
        grad.top.scale(1.0 / n);
        (total / n, grad)
    }

    /// Flattened parameters: W, b, V, c.
    pub fn parameters(&self) -> Vec<f64> {
        self.hidden.parameters().chain(self.top.parameters()).copied().collect()
    }

    pub fn set_parameters(&mut self, values: &[f64]) {
        for (p, v) in self
            .hidden
            .parameters_mut()
            .chain(self.top.parameters_mut())
            .zip(values)
        {
            *p = *v;
        }
    }

    fn step(&mut self, grad: &Network, lr: f64) {
        self.hidden.step(&grad.hidden, lr);
        self.top.step(&grad.top, lr);
    }
}

fn check_labels(labels: &[usize], n: usize) -> Result<usize> {
    check_dim(n, labels.len())?;
    let classes = labels.iter().copied().max().ok_or(Error::EmptyInput)? + 1;
    Ok(classes.max(2))
}

/// Supervised training of the encoder plus a fresh softmax top layer.
/// Returns the network and its loss curve (before training, then per epoch).
pub fn finetune(
    encoder: Dense,
    train: &[Vec<f64>],
    labels: &[usize],
    params: &DaeParams,
) -> Result<(Network, Vec<f64>)> {
    params.validate()?;
    let classes = check_labels(labels, train.len())?;
    for row in train {
        check_dim(encoder.inputs, row.len())?;
    }
    let mut init = seed::rng_at(params.seed, &[INIT_STREAM, 1]);
    let top = Dense::random(encoder.outputs, classes, &mut init);
    let mut net = Network { hidden: encoder, top };
    let mut curve = vec![net.loss(train, labels)];
    for epoch in 0..params.epochs_finetune {
        let mut rng = seed::rng_at(params.seed, &[SHUFFLE_FINETUNE_STREAM, epoch as u64]);
        for batch in minibatches(train.len(), params.minibatch, &mut rng) {
            let batch_labels: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let (loss, grad) = net.loss_and_grad(&gather(train, &batch), &batch_labels);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            net.step(&grad, params.lr_finetune);
        }
        let loss = net.loss(train, labels);
        if !loss.is_finite() || net.parameters().iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch });
        }
        curve.push(loss);
    }
    Ok((net, curve))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub probabilities: Vec<f64>,
}

/// Argmax with ties resolved to the lowest class index.
fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > values[best] { i } else { best })
}

/// A trained DAE-initialised classifier together with its input scaling.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DaeClassifier {
    pub scaler: MinMaxScaler,
    pub network: Network,
    pub params: DaeParams,
    pub pretrain_curve: Vec<f64>,
    pub finetune_curve: Vec<f64>,
}

impl DaeClassifier {
    /// Fits the scaler, pretrains, and fine-tunes on raw feature rows.
    pub fn fit(features: &[Vec<f64>], labels: &[usize], params: &DaeParams) -> Result<Self> {
        params.validate()?;
        check_labels(labels, features.len())?;
        let scaler = MinMaxScaler::fit(features)?;
        let scaled = scaler.transform_batch(features)?;
        let pre = pretrain(&scaled, params)?;
        let (network, finetune_curve) = finetune(pre.autoencoder.encoder, &scaled, labels, params)?;
        Ok(Self {
            scaler,
            network,
            params: *params,
            pretrain_curve: pre.loss_curve,
            finetune_curve,
        })
    }

    /// Like [`fit`](Self::fit), but halves both learning rates after a
    /// non-finite loss, at most `max_halvings` times. The stored params
    /// carry the learning rates actually used.
    pub fn fit_with_backoff(
        features: &[Vec<f64>],
        labels: &[usize],
        params: &DaeParams,
        max_halvings: usize,
    ) -> Result<Self> {
        let mut p = *params;
        let mut attempt = 0;
        loop {
            match Self::fit(features, labels, &p) {
                Err(Error::NonFiniteLoss { .. }) if attempt < max_halvings => {
                    p.lr_pretrain *= 0.5;
                    p.lr_finetune *= 0.5;
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    pub fn input_dim(&self) -> usize {
        self.scaler.dim()
    }

    pub fn predict(&self, features: &[f64]) -> Result<Prediction> {
        let x = self.scaler.transform(features)?;
        let probabilities = self.network.probabilities(&x);
        Ok(Prediction {
            class: argmax(&probabilities),
            probabilities,
        })
    }
}
