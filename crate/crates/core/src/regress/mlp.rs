// SPDX-License-Identifier: Apache-2.0

//! Fully connected regression network trained with mini-batch Adam on
//! mean squared error.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_training_data, check_width, RegressError};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the pre-activation.
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - z.tanh().powi(2),
            Activation::Linear => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpParams {
    pub input_dim: usize,
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            input_dim: 8,
            layer_sizes: vec![126, 64, 36, 12, 1],
            hidden_activation: Activation::Relu,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            batch_size: 10,
            epochs: 200,
            seed: 0,
        }
    }
}

impl MlpParams {
    fn check(&self) -> Result<(), RegressError> {
        let bad = |m: &str| Err(RegressError::InvalidParam(m.into()));
        if self.input_dim == 0 {
            return bad("input_dim must be >= 1");
        }
        if self.layer_sizes.last() != Some(&1) {
            return bad("the final layer must have size 1");
        }
        if self.layer_sizes.contains(&0) {
            return bad("layer sizes must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be > 0");
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return bad("Adam betas must lie in [0, 1)");
        }
        if !(self.adam_epsilon > 0.0) {
            return bad("adam_epsilon must be > 0");
        }
        Ok(())
    }
}

/// `(output size, parameter count)` per dense layer.
pub fn count_parameters(params: &MlpParams) -> Vec<(usize, usize)> {
    let mut fan_in = params.input_dim;
    params
        .layer_sizes
        .iter()
        .map(|&out| {
            let count = out * (fan_in + 1);
            fan_in = out;
            (out, count)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    fn forward(&self, x: &[f64], z: &mut Vec<f64>, a: &mut Vec<f64>) {
        z.clear();
        a.clear();
        for o in 0..self.outputs {
            let w = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let s = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.biases[o];
            z.push(s);
            a.push(self.activation.apply(s));
        }
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<Dense>,
}

impl MlpModel {
    /// Glorot-uniform weights, zero biases.
    pub fn init(params: &MlpParams) -> Result<Self, RegressError> {
        params.check()?;
        let mut rng = seed::rng(params.seed, &[0x6d6c_7069]);
        let mut fan_in = params.input_dim;
        let last = params.layer_sizes.len() - 1;
        let layers = params
            .layer_sizes
            .iter()
            .enumerate()
            .map(|(l, &out)| {
                let limit = (6.0 / (fan_in + out) as f64).sqrt();
                let weights = (0..out * fan_in).map(|_| rng.gen_range(-limit..=limit)).collect();
                let layer = Dense {
                    inputs: fan_in,
                    outputs: out,
                    weights,
                    biases: vec![0.0; out],
                    activation: if l == last { Activation::Linear } else { params.hidden_activation },
                };
                fan_in = out;
                layer
            })
            .collect();
        Ok(MlpModel { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    /// All parameters, layer by layer, weights before biases.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count());
        let mut off = 0;
        for l in &mut self.layers {
            let (w, b) = (l.weights.len(), l.biases.len());
            l.weights.copy_from_slice(&flat[off..off + w]);
            l.biases.copy_from_slice(&flat[off + w..off + w + b]);
            off += w + b;
        }
    }

    fn mean_squared_error(&self, x: &[Vec<f64>], y: &[f64]) -> f64 {
        x.iter().zip(y).map(|(r, t)| (self.predict_row(r) - t).powi(2)).sum::<f64>() / x.len() as f64
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        let (mut z, mut a) = (Vec::new(), x.to_vec());
        let mut next = Vec::new();
        for l in &self.layers {
            l.forward(&a, &mut z, &mut next);
            std::mem::swap(&mut a, &mut next);
        }
        a[0]
    }

    /// Mean squared error over the rows and its gradient with respect to
    /// [`MlpModel::flat_params`].
    pub fn loss_and_gradient(&self, x: &[Vec<f64>], y: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.param_count()];
        let mut loss = 0.0;
        let scale = 1.0 / x.len() as f64;
        let mut zs: Vec<Vec<f64>> = vec![Vec::new(); self.layers.len()];
        let mut acts: Vec<Vec<f64>> = vec![Vec::new(); self.layers.len() + 1];
        let offsets: Vec<usize> = self
            .layers
            .iter()
            .scan(0, |off, l| {
                let o = *off;
                *off += l.param_count();
                Some(o)
            })
            .collect();

        for (row, &target) in x.iter().zip(y) {
            acts[0].clear();
            acts[0].extend_from_slice(row);
            for (l, layer) in self.layers.iter().enumerate() {
                let (before, after) = acts.split_at_mut(l + 1);
                layer.forward(&before[l], &mut zs[l], &mut after[0]);
            }
            let err = acts[self.layers.len()][0] - target;
            loss += err * err * scale;

            // delta = dL/dz for the current layer.
            let mut delta: Vec<f64> = vec![2.0 * err * scale * self.layers.last().unwrap().activation.derivative(zs[self.layers.len() - 1][0])];
            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                let input = &acts[l];
                let g = &mut grad[offsets[l]..offsets[l] + layer.param_count()];
                let (gw, gb) = g.split_at_mut(layer.weights.len());
                for o in 0..layer.outputs {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    for (gwi, xi) in gw[o * layer.inputs..(o + 1) * layer.inputs].iter_mut().zip(input) {
                        *gwi += d * xi;
                    }
                }
                if l > 0 {
                    let prev = &self.layers[l - 1];
                    delta = (0..layer.inputs)
                        .map(|i| {
                            let back: f64 = (0..layer.outputs).map(|o| layer.weights[o * layer.inputs + i] * delta[o]).sum();
                            back * prev.activation.derivative(zs[l - 1][i])
                        })
                        .collect();
                }
            }
        }
        (loss, grad)
    }
}

/// Adam optimiser state over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Adam { lr, beta1, beta2, eps, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Training diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MlpFit {
    /// Full training-set MSE after each epoch.
    pub epoch_mse: Vec<f64>,
}

pub fn fit_mlp(x: &[Vec<f64>], y: &[f64], params: &MlpParams) -> Result<MlpModel, RegressError> {
    fit_mlp_with_report(x, y, params).map(|(m, _)| m)
}

pub fn fit_mlp_with_report(
    x: &[Vec<f64>],
    y: &[f64],
    params: &MlpParams,
) -> Result<(MlpModel, MlpFit), RegressError> {
    params.check()?;
    let d = check_training_data(x, y, 1)?;
    if d != params.input_dim {
        return Err(RegressError::DimensionMismatch { expected: params.input_dim, found: d });
    }
    let mut model = MlpModel::init(params)?;
    let mut flat = model.flat_params();
    let mut adam = Adam::new(flat.len(), params.learning_rate, params.beta1, params.beta2, params.adam_epsilon);
    let mut rng = seed::rng(params.seed, &[0x7368_7566]);
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut epoch_mse = Vec::with_capacity(params.epochs);
    let (mut bx, mut by) = (Vec::with_capacity(params.batch_size), Vec::with_capacity(params.batch_size));

    for epoch in 1..=params.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(params.batch_size) {
            bx.clear();
            by.clear();
            bx.extend(batch.iter().map(|&i| x[i].clone()));
            by.extend(batch.iter().map(|&i| y[i]));
            let (loss, grad) = model.loss_and_gradient(&bx, &by);
            if !loss.is_finite() {
                return Err(RegressError::NonFiniteLoss { epoch });
            }
            adam.step(&mut flat, &grad);
            model.set_flat_params(&flat);
        }
        let mse = model.mean_squared_error(x, y);
        if !mse.is_finite() {
            return Err(RegressError::NonFiniteLoss { epoch });
        }
        log::debug!("mlp epoch {epoch}: train mse {mse:.6e}");
        epoch_mse.push(mse);
    }
    Ok((model, MlpFit { epoch_mse }))
}

pub fn predict_mlp(model: &MlpModel, x: &[Vec<f64>]) -> Result<Vec<f64>, RegressError> {
    check_width(x, model.input_dim())?;
    Ok(x.par_iter().map(|r| model.predict_row(r)).collect())
}
