//! One-hidden-layer perceptron for binary classification.
//!
//! inputs -> hidden (ReLU) -> 1 (sigmoid), trained on mean binary
//! cross-entropy with mini-batch Adam updates.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{check_training_set, Prediction};
use crate::error::{Error, Result};
use crate::maskio::ClassLabel;
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            epochs: 200,
            batch_size: 16,
            learning_rate: 1e-3,
        }
    }
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub config: MlpConfig,
    pub seed: u64,
    pub n_inputs: usize,
    /// hidden x n_inputs, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

/// Same layout as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl Gradients {
    fn zeros(m: &MlpModel) -> Self {
        Self {
            w1: vec![0.0; m.w1.len()],
            b1: vec![0.0; m.b1.len()],
            w2: vec![0.0; m.w2.len()],
            b2: 0.0,
        }
    }

    /// Flattened in the order w1, b1, w2, b2.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.w1.len() + self.b1.len() + self.w2.len() + 1);
        v.extend(&self.w1);
        v.extend(&self.b1);
        v.extend(&self.w2);
        v.push(self.b2);
        v
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// -[y ln s(z) + (1-y) ln(1 - s(z))], evaluated without overflow.
fn bce_from_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z
}

impl MlpModel {
    /// He-initialized weights, zero biases.
    pub fn init(n_inputs: usize, config: &MlpConfig, seed: u64) -> Self {
        let mut rng = substream(seed, Stream::MlpInit, 0);
        let he = |fan_in: usize| Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
        let d1 = he(n_inputs);
        let d2 = he(config.hidden);
        Self {
            config: config.clone(),
            seed,
            n_inputs,
            w1: (0..config.hidden * n_inputs).map(|_| d1.sample(&mut rng)).collect(),
            b1: vec![0.0; config.hidden],
            w2: (0..config.hidden).map(|_| d2.sample(&mut rng)).collect(),
            b2: 0.0,
        }
    }

    fn hidden_pre(&self, x: &[f64]) -> Vec<f64> {
        self.b1
            .iter()
            .enumerate()
            .map(|(j, b)| {
                let w = &self.w1[j * self.n_inputs..(j + 1) * self.n_inputs];
                b + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    /// Output logit.
    pub fn logit(&self, x: &[f64]) -> f64 {
        let pre = self.hidden_pre(x);
        self.b2 + pre.iter().zip(&self.w2).map(|(h, w)| h.max(0.0) * w).sum::<f64>()
    }

    pub fn n_parameters(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    pub(crate) fn parameters_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(std::iter::once(&mut self.b2))
    }
}

/// Mean cross-entropy over the batch and its exact gradient.
pub fn loss_and_gradients(model: &MlpModel, rows: &[Vec<f64>], targets: &[f64]) -> (f64, Gradients) {
    let mut g = Gradients::zeros(model);
    let mut loss = 0.0;
    let n = rows.len() as f64;
    for (x, &y) in rows.iter().zip(targets) {
        let pre = model.hidden_pre(x);
        let z = model.b2 + pre.iter().zip(&model.w2).map(|(h, w)| h.max(0.0) * w).sum::<f64>();
        loss += bce_from_logit(z, y);
        let dz = sigmoid(z) - y;
        g.b2 += dz;
        for (j, &p) in pre.iter().enumerate() {
            if p > 0.0 {
                g.w2[j] += dz * p;
                let dp = dz * model.w2[j];
                g.b1[j] += dp;
                for (gw, xi) in g.w1[j * model.n_inputs..(j + 1) * model.n_inputs].iter_mut().zip(x) {
                    *gw += dp * xi;
                }
            }
        }
    }
    for v in g.w1.iter_mut().chain(g.b1.iter_mut()).chain(g.w2.iter_mut()) {
        *v /= n;
    }
    g.b2 /= n;
    (loss / n, g)
}

/// Final model and the mean training loss of every epoch.
#[derive(Debug, Clone)]
pub struct MlpTraining {
    pub model: MlpModel,
    pub loss_trace: Vec<f64>,
}

pub fn train_mlp(rows: &[Vec<f64>], labels: &[ClassLabel], config: &MlpConfig, seed: u64) -> Result<MlpTraining> {
    let dim = check_training_set(rows, labels)?;
    if config.hidden == 0 || config.batch_size == 0 {
        return Err(Error::Training("hidden and batch_size must be at least 1".into()));
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::Training(format!(
            "invalid learning rate {}",
            config.learning_rate
        )));
    }
    let targets: Vec<f64> = labels.iter().map(|l| l.index() as f64).collect();
    let mut model = MlpModel::init(dim, config, seed);
    let mut shuffle_rng = substream(seed, Stream::MlpShuffle, 0);
    let n_params = model.n_parameters();
    let (mut m1, mut m2) = (vec![0.0; n_params], vec![0.0; n_params]);
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut loss_trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let xs: Vec<Vec<f64>> = batch.iter().map(|&i| rows[i].clone()).collect();
            let ys: Vec<f64> = batch.iter().map(|&i| targets[i]).collect();
            let (loss, grad) = loss_and_gradients(&model, &xs, &ys);
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            epoch_loss += loss * batch.len() as f64;
            step += 1;
            let lr_t = config.learning_rate * (1.0 - ADAM_BETA2.powi(step)).sqrt() / (1.0 - ADAM_BETA1.powi(step));
            for (((p, g), m), v) in model.parameters_mut().zip(grad.flatten()).zip(&mut m1).zip(&mut m2) {
                *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                *p -= lr_t * *m / (v.sqrt() + ADAM_EPS);
            }
        }
        let mean = epoch_loss / rows.len() as f64;
        if !mean.is_finite() || !model.parameters_mut().all(|p| p.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
        loss_trace.push(mean);
    }
    Ok(MlpTraining { model, loss_trace })
}

/// Malignant iff the sigmoid output is at least 0.5.
pub fn predict_mlp(model: &MlpModel, row: &[f64]) -> Result<Prediction> {
    if row.len() != model.n_inputs {
        return Err(Error::shape(
            format!("{} features", model.n_inputs),
            format!("{} features", row.len()),
        ));
    }
    let score = sigmoid(model.logit(row));
    Ok(Prediction {
        label: if score >= 0.5 {
            ClassLabel::Malignant
        } else {
            ClassLabel::Benign
        },
        score,
    })
}
