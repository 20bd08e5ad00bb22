//! Single-hidden-layer perceptron for lag-window regression.
//!
//! `n_inputs` lagged values feed `n_nodes` ReLU units and one linear output.
//! Training minimizes mean squared error with Adam on shuffled mini-batches.
//! Inputs and targets share one standardization fitted on the training data,
//! so an identity lag map stays an identity map in scaled space.
//!
//! Parameters live in a single flat vector laid out as
//! `[w1 (n_nodes x n_inputs, row-major), b1 (n_nodes), w2 (n_nodes), b2]`,
//! which keeps the optimizer and the gradient check layout-agnostic.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::OneStepForecaster;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub n_inputs: usize,
    pub n_nodes: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            n_inputs: 1,
            n_nodes: 150,
            epochs: 100,
            batch_size: 150,
            seed: 0,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shape {
    pub n_inputs: usize,
    pub n_nodes: usize,
}

impl Shape {
    pub fn n_params(&self) -> usize {
        self.n_nodes * self.n_inputs + 2 * self.n_nodes + 1
    }

    fn w1(&self) -> std::ops::Range<usize> {
        0..self.n_nodes * self.n_inputs
    }

    fn b1(&self) -> std::ops::Range<usize> {
        let s = self.n_nodes * self.n_inputs;
        s..s + self.n_nodes
    }

    fn w2(&self) -> std::ops::Range<usize> {
        let s = self.n_nodes * self.n_inputs + self.n_nodes;
        s..s + self.n_nodes
    }

    fn b2(&self) -> usize {
        self.n_params() - 1
    }
}

/// Forward pass for one sample.
pub fn predict_raw(shape: Shape, params: &[f64], x: &[f64]) -> f64 {
    let w1 = &params[shape.w1()];
    let b1 = &params[shape.b1()];
    let w2 = &params[shape.w2()];
    let mut out = params[shape.b2()];
    for h in 0..shape.n_nodes {
        let row = &w1[h * shape.n_inputs..(h + 1) * shape.n_inputs];
        let z = b1[h] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        if z > 0.0 {
            out += w2[h] * z;
        }
    }
    out
}

/// Mean squared error over the batch.
pub fn loss(shape: Shape, params: &[f64], xs: &[Vec<f64>], ys: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(x, y)| (predict_raw(shape, params, x) - y).powi(2))
        .sum::<f64>()
        / xs.len() as f64
}

/// Mean squared error and its gradient by backpropagation.
pub fn loss_and_gradient(shape: Shape, params: &[f64], xs: &[Vec<f64>], ys: &[f64]) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; shape.n_params()];
    let loss = accumulate_gradient(shape, params, xs.iter().map(Vec::as_slice), ys.iter().copied(), &mut grad);
    (loss, grad)
}

fn accumulate_gradient<'a>(
    shape: Shape,
    params: &[f64],
    xs: impl Iterator<Item = &'a [f64]>,
    ys: impl Iterator<Item = f64>,
    grad: &mut [f64],
) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let (n_in, n_h) = (shape.n_inputs, shape.n_nodes);
    let mut z = vec![0.0; n_h];
    let mut total = 0.0;
    let mut count = 0usize;
    for (x, y) in xs.zip(ys) {
        let mut out = params[shape.b2()];
        for h in 0..n_h {
            let row = &params[h * n_in..(h + 1) * n_in];
            z[h] = params[shape.b1().start + h] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            if z[h] > 0.0 {
                out += params[shape.w2().start + h] * z[h];
            }
        }
        let err = out - y;
        total += err * err;
        count += 1;

        // d(err^2)/d(out); the 1/batch factor is applied at the end
        let d_out = 2.0 * err;
        grad[shape.b2()] += d_out;
        for h in 0..n_h {
            if z[h] <= 0.0 {
                continue;
            }
            grad[shape.w2().start + h] += d_out * z[h];
            let d_z = d_out * params[shape.w2().start + h];
            grad[shape.b1().start + h] += d_z;
            for (i, v) in x.iter().enumerate() {
                grad[h * n_in + i] += d_z * v;
            }
        }
    }
    let scale = 1.0 / count as f64;
    grad.iter_mut().for_each(|g| *g *= scale);
    total * scale
}

/// He-style uniform initialization, biases at zero.
pub fn init_params(shape: Shape, rng: &mut impl Rng) -> Vec<f64> {
    let mut p = vec![0.0; shape.n_params()];
    let lim1 = (6.0 / shape.n_inputs as f64).sqrt();
    for w in &mut p[shape.w1()] {
        *w = rng.random_range(-lim1..lim1);
    }
    let lim2 = (6.0 / shape.n_nodes as f64).sqrt();
    for w in &mut p[shape.w2()] {
        *w = rng.random_range(-lim2..lim2);
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: f64,
    pub scale: f64,
}

impl Standardizer {
    pub fn fit(values: &[f64]) -> Self {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
        let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        Standardizer { mean, scale }
    }

    pub fn forward(&self, v: f64) -> f64 {
        (v - self.mean) / self.scale
    }

    pub fn inverse(&self, v: f64) -> f64 {
        v * self.scale + self.mean
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub shape: Shape,
    pub params: Vec<f64>,
    pub scaler: Standardizer,
}

impl MlpModel {
    /// Trains on explicit (input window, target) pairs in original units.
    pub fn train(xs: &[Vec<f64>], ys: &[f64], config: &MlpConfig) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::invalid("MLP needs equally many, non-empty inputs and targets"));
        }
        if xs.iter().any(|x| x.len() != config.n_inputs) {
            return Err(Error::invalid(format!("every MLP input must have {} values", config.n_inputs)));
        }
        if config.n_nodes == 0 || config.batch_size == 0 {
            return Err(Error::invalid("MLP nodes and batch size must be >= 1"));
        }
        let shape = Shape {
            n_inputs: config.n_inputs,
            n_nodes: config.n_nodes,
        };
        let scaler = Standardizer::fit(ys);
        let sx: Vec<Vec<f64>> = xs
            .iter()
            .map(|x| x.iter().map(|v| scaler.forward(*v)).collect())
            .collect();
        let sy: Vec<f64> = ys.iter().map(|v| scaler.forward(*v)).collect();

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = init_params(shape, &mut rng);
        let mut m = vec![0.0; params.len()];
        let mut v = vec![0.0; params.len()];
        let mut grad = vec![0.0; params.len()];
        let mut order: Vec<usize> = (0..sx.len()).collect();
        let mut step = 0i32;

        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(config.batch_size) {
                accumulate_gradient(
                    shape,
                    &params,
                    batch.iter().map(|&i| sx[i].as_slice()),
                    batch.iter().map(|&i| sy[i]),
                    &mut grad,
                );
                step += 1;
                let c1 = 1.0 - config.beta1.powi(step);
                let c2 = 1.0 - config.beta2.powi(step);
                for k in 0..params.len() {
                    m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * grad[k];
                    v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * grad[k] * grad[k];
                    let m_hat = m[k] / c1;
                    let v_hat = v[k] / c2;
                    params[k] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
                }
            }
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numerical("MLP weights diverged".into()));
        }
        Ok(MlpModel { shape, params, scaler })
    }

    /// Prediction in original units from the last `n_inputs` values.
    pub fn predict(&self, window: &[f64]) -> f64 {
        let x: Vec<f64> = window.iter().map(|v| self.scaler.forward(*v)).collect();
        self.scaler.inverse(predict_raw(self.shape, &self.params, &x))
    }
}

/// Supervised lag pairs: each input is `n_inputs` consecutive values and the
/// target is the value right after them.
pub fn lag_pairs(series: &[f64], n_inputs: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    series
        .windows(n_inputs + 1)
        .map(|w| (w[..n_inputs].to_vec(), w[n_inputs]))
        .unzip()
}

pub fn fit_mlp(train: &[f64], config: &MlpConfig) -> Result<MlpModel> {
    if config.n_inputs == 0 {
        return Err(Error::invalid("MLP needs at least one input"));
    }
    if train.len() <= config.n_inputs + 1 {
        return Err(Error::InsufficientHistory {
            needed: config.n_inputs + 2,
            available: train.len(),
        });
    }
    let (xs, ys) = lag_pairs(train, config.n_inputs);
    MlpModel::train(&xs, &ys, config)
}

/// Trains once on the training prefix and then slides over the history.
pub(crate) struct MlpForecaster {
    config: MlpConfig,
    model: Option<MlpModel>,
}

impl MlpForecaster {
    pub fn new(config: MlpConfig) -> Self {
        MlpForecaster { config, model: None }
    }
}

impl OneStepForecaster for MlpForecaster {
    fn fit(&mut self, train: &[f64]) -> Result<()> {
        self.model = Some(fit_mlp(train, &self.config)?);
        Ok(())
    }

    fn predict_next(&mut self, history: &[f64]) -> Result<f64> {
        let model = self
            .model
            .as_ref()
            .ok_or_else(|| Error::invalid("MLP used before fit"))?;
        let k = self.config.n_inputs;
        if history.len() < k {
            return Err(Error::InsufficientHistory {
                needed: k,
                available: history.len(),
            });
        }
        let f = model.predict(&history[history.len() - k..]);
        if !f.is_finite() {
            return Err(Error::Numerical("MLP prediction is not finite".into()));
        }
        Ok(f)
    }
}
