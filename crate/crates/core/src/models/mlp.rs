//! Feed-forward network: rectifier hidden layers and a logistic output unit,
//! trained on binary cross-entropy with Adam mini-batch updates.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_training_data, class_weights, Predictor};
use crate::{Error, Result};

/// Fully connected layer. `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weights: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    /// Uniform in +-sqrt(6 / (fan_in + fan_out)), zero bias.
    fn glorot<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = (0..inputs * outputs).map(|_| rng.random_range(-limit..limit)).collect();
        Self { inputs, outputs, weights, bias: vec![0.0; outputs] }
    }

    fn forward(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.bias.iter().enumerate().map(|(o, b)| {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>()
        }));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub balanced: bool,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self { hidden: vec![64, 32, 16], learning_rate: 1e-3, epochs: 30, batch_size: 64, balanced: false, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub params: MlpParams,
    /// Mean training loss per epoch.
    pub loss_history: Vec<f64>,
}

/// Loss gradients, one entry per layer, shaped like the layer parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub loss: f64,
    pub layers: Vec<Dense>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of a logit: `log(1 + e^z) - y z`.
fn bce_with_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - y * z + (-z.abs()).exp().ln_1p()
}

impl Mlp {
    /// Network with the given layer widths (input first, 1 last) and all-zero parameters.
    pub fn zeros(widths: &[usize]) -> Result<Self> {
        Self::check_widths(widths)?;
        let layers = widths.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        Ok(Self { layers, params: MlpParams::default(), loss_history: Vec::new() })
    }

    /// Glorot-initialised network with the given layer widths.
    pub fn random(widths: &[usize], seed: u64) -> Result<Self> {
        Self::check_widths(widths)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = widths.windows(2).map(|w| Dense::glorot(w[0], w[1], &mut rng)).collect();
        Ok(Self { layers, params: MlpParams::default(), loss_history: Vec::new() })
    }

    fn check_widths(widths: &[usize]) -> Result<()> {
        if widths.len() < 2 || widths.contains(&0) || widths[widths.len() - 1] != 1 {
            return Err(Error::InvalidParam(format!("bad layer widths {widths:?}")));
        }
        Ok(())
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.layers[0].inputs];
        w.extend(self.layers.iter().map(|l| l.outputs));
        w
    }

    /// Pre-activations of every layer (the last entry holds the output logit).
    pub fn preactivations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut zs = Vec::with_capacity(self.layers.len());
        let mut a = x.to_vec();
        let mut z = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            layer.forward(&a, &mut z);
            zs.push(z.clone());
            if l + 1 < self.layers.len() {
                a.clear();
                a.extend(z.iter().map(|v| v.max(0.0)));
            }
        }
        zs
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        let mut a = x.to_vec();
        let mut z = Vec::new();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            layer.forward(&a, &mut z);
            if l < last {
                std::mem::swap(&mut a, &mut z);
                a.iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
        z[0]
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        self.predict_checked(x)
    }

    /// Mean binary cross-entropy over the batch.
    pub fn loss(&self, x: &[Vec<f64>], y: &[u8]) -> f64 {
        let total: f64 = x.iter().zip(y).map(|(r, &l)| bce_with_logit(self.logit(r), f64::from(l))).sum();
        total / x.len() as f64
    }

    /// Gradient of the mean binary cross-entropy over the batch.
    pub fn gradient(&self, x: &[Vec<f64>], y: &[u8]) -> Result<Gradients> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::InvalidInput("batch rows and labels must be non-empty and equal in number".into()));
        }
        let width = self.n_features();
        if let Some(r) = x.iter().find(|r| r.len() != width) {
            return Err(Error::WidthMismatch { expected: width, got: r.len() });
        }
        let weights = vec![1.0; x.len()];
        let idx: Vec<usize> = (0..x.len()).collect();
        Ok(self.weighted_gradient(x, y, &weights, &idx))
    }

    /// Backpropagation over `x[idx]`, each sample's loss scaled by
    /// `sample_weight / idx.len()`.
    fn weighted_gradient(&self, x: &[Vec<f64>], y: &[u8], sample_weight: &[f64], idx: &[usize]) -> Gradients {
        let mut grads: Vec<Dense> = self.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect();
        let scale = 1.0 / idx.len() as f64;
        let mut loss = 0.0;
        let n_layers = self.layers.len();
        let mut acts: Vec<Vec<f64>> = vec![Vec::new(); n_layers + 1];
        let mut zs: Vec<Vec<f64>> = vec![Vec::new(); n_layers];
        let mut delta: Vec<f64> = Vec::new();
        let mut next: Vec<f64> = Vec::new();
        for &i in idx {
            acts[0].clear();
            acts[0].extend_from_slice(&x[i]);
            for (l, layer) in self.layers.iter().enumerate() {
                let (before, after) = acts.split_at_mut(l + 1);
                layer.forward(&before[l], &mut zs[l]);
                after[0].clear();
                if l + 1 < n_layers {
                    after[0].extend(zs[l].iter().map(|v| v.max(0.0)));
                } else {
                    after[0].extend_from_slice(&zs[l]);
                }
            }
            let z = zs[n_layers - 1][0];
            let target = f64::from(y[i]);
            let w = sample_weight[i] * scale;
            loss += w * bce_with_logit(z, target);
            delta.clear();
            delta.push(w * (sigmoid(z) - target));
            for l in (0..n_layers).rev() {
                let layer = &self.layers[l];
                let g = &mut grads[l];
                let input = &acts[l];
                for (o, d) in delta.iter().enumerate() {
                    g.bias[o] += d;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gw, a) in row.iter_mut().zip(input) {
                        *gw += d * a;
                    }
                }
                if l > 0 {
                    next.clear();
                    next.resize(layer.inputs, 0.0);
                    for (o, d) in delta.iter().enumerate() {
                        let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                        for (n, wv) in next.iter_mut().zip(row) {
                            *n += d * wv;
                        }
                    }
                    for (n, zp) in next.iter_mut().zip(&zs[l - 1]) {
                        if *zp <= 0.0 {
                            *n = 0.0;
                        }
                    }
                    std::mem::swap(&mut delta, &mut next);
                }
            }
        }
        Gradients { loss, layers: grads }
    }
}

impl Predictor for Mlp {
    fn n_features(&self) -> usize {
        self.layers[0].inputs
    }

    fn predict(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }
}

pub fn mlp_predict_proba(mlp: &Mlp, x: &[f64]) -> Result<f64> {
    mlp.predict_checked(x)
}

pub fn mlp_gradient(mlp: &Mlp, x: &[Vec<f64>], y: &[u8]) -> Result<Gradients> {
    mlp.gradient(x, y)
}

struct Adam {
    m: Vec<Dense>,
    v: Vec<Dense>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(layers: &[Dense]) -> Self {
        let zeros = || layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect();
        Self { m: zeros(), v: zeros(), t: 0 }
    }

    fn step(&mut self, layers: &mut [Dense], grads: &[Dense], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for (l, layer) in layers.iter_mut().enumerate() {
            let (m, v) = (&mut self.m[l], &mut self.v[l]);
            let pairs = [
                (&mut layer.weights, &grads[l].weights, &mut m.weights, &mut v.weights),
                (&mut layer.bias, &grads[l].bias, &mut m.bias, &mut v.bias),
            ];
            for (params, g, m, v) in pairs {
                for k in 0..params.len() {
                    m[k] = Self::BETA1 * m[k] + (1.0 - Self::BETA1) * g[k];
                    v[k] = Self::BETA2 * v[k] + (1.0 - Self::BETA2) * g[k] * g[k];
                    params[k] -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + Self::EPS);
                }
            }
        }
    }
}

/// Trains a network of widths `[p, hidden..., 1]`. Zero epochs returns the
/// seeded initialisation untouched.
pub fn train_mlp(x: &[Vec<f64>], y: &[u8], params: &MlpParams) -> Result<Mlp> {
    let n_features = check_training_data(x, y)?;
    if params.batch_size == 0 || !(params.learning_rate > 0.0) {
        return Err(Error::InvalidParam("batch size and learning rate must be positive".into()));
    }
    let mut widths = vec![n_features];
    widths.extend(&params.hidden);
    widths.push(1);
    let mut mlp = Mlp::random(&widths, params.seed)?;
    mlp.params = params.clone();

    let cw = class_weights(y, params.balanced);
    let sample_weight: Vec<f64> = y.iter().map(|&l| cw[usize::from(l)]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x005e_ed0f_ba7c);
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut adam = Adam::new(&mlp.layers);
    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(params.batch_size) {
            let g = mlp.weighted_gradient(x, y, &sample_weight, batch);
            if !g.loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            epoch_loss += g.loss * batch.len() as f64;
            adam.step(&mut mlp.layers, &g.layers, params.learning_rate);
        }
        let mean = epoch_loss / x.len() as f64;
        if !mean.is_finite() || mlp.layers.iter().any(|l| l.weights.iter().any(|w| !w.is_finite())) {
            return Err(Error::Diverged { epoch });
        }
        mlp.loss_history.push(mean);
    }
    Ok(mlp)
}
