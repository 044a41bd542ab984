//! Bayesian feed-forward classifier.
//!
//! Parameter layout, frozen so that traces stay portable: for each layer in
//! order, the weight matrix (row-major, `out x in`) followed by its bias
//! vector. Hidden layers apply the activation; the output layer is affine and
//! feeds a softmax.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::DenseDataset;
use crate::error::{Error, Result};
use crate::model::{Batch, GradientModel};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Relu,
    Sigmoid,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => crate::models::sigmoid(z),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    /// The ReLU subgradient at 0 is 0.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(Error::invalid(format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MlpModel {
    layer_sizes: Vec<usize>,
    activation: Activation,
    prior_variance: f64,
    data: DenseDataset,
    /// Offset of each layer's weight block in the flat parameter vector.
    offsets: Vec<usize>,
    dim: usize,
}

/// Per-sample activations kept for the backward pass.
struct Tape {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    delta: Vec<f64>,
    back: Vec<f64>,
}

impl MlpModel {
    pub fn new(
        layer_sizes: Vec<usize>,
        activation: Activation,
        prior_variance: f64,
        data: DenseDataset,
    ) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::invalid("layer sizes need an input and an output layer, all nonzero"));
        }
        if layer_sizes[0] != data.dim {
            return Err(Error::invalid(format!(
                "input layer has {} units but data has {} features",
                layer_sizes[0], data.dim
            )));
        }
        if *layer_sizes.last().unwrap() != data.classes {
            return Err(Error::invalid(format!(
                "output layer has {} units but data has {} classes",
                layer_sizes.last().unwrap(),
                data.classes
            )));
        }
        if !(prior_variance > 0.0) {
            return Err(Error::invalid("prior variance must be positive"));
        }
        let mut offsets = Vec::with_capacity(layer_sizes.len() - 1);
        let mut dim = 0;
        for w in layer_sizes.windows(2) {
            offsets.push(dim);
            dim += w[0] * w[1] + w[1];
        }
        Ok(Self { layer_sizes, activation, prior_variance, data, offsets, dim })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn data(&self) -> &DenseDataset {
        &self.data
    }

    /// Initial parameters drawn i.i.d. from `N(0, 0.01)`.
    pub fn init_params(&self, rng: &mut RngStream) -> Vec<f64> {
        (0..self.dim).map(|_| 0.1 * rng.normal()).collect()
    }

    fn tape(&self) -> Tape {
        let widest = *self.layer_sizes.iter().max().unwrap();
        Tape {
            pre: self.layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect(),
            post: self.layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect(),
            delta: Vec::with_capacity(widest),
            back: Vec::with_capacity(widest),
        }
    }

    /// Forward pass for one input; leaves class probabilities in the last `post` slot.
    fn forward_into(&self, theta: &[f64], x: &[f64], tape: &mut Tape) {
        let layers = self.offsets.len();
        for l in 0..layers {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let w = &theta[self.offsets[l]..self.offsets[l] + n_in * n_out];
            let b = &theta[self.offsets[l] + n_in * n_out..self.offsets[l] + n_in * n_out + n_out];
            let (done, rest) = tape.post.split_at_mut(l);
            let input: &[f64] = if l == 0 { x } else { &done[l - 1] };
            let pre = &mut tape.pre[l];
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                pre[o] = b[o] + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
            }
            let out = &mut rest[0];
            if l + 1 == layers {
                softmax_into(pre, out);
            } else {
                for (a, &z) in out.iter_mut().zip(pre.iter()) {
                    *a = self.activation.apply(z);
                }
            }
        }
    }

    /// Class probabilities, one row per input row (`batch_features` is row-major).
    pub fn forward(&self, theta: &[f64], batch_features: &[f64]) -> Vec<Vec<f64>> {
        let d = self.layer_sizes[0];
        let mut tape = self.tape();
        batch_features
            .chunks_exact(d)
            .map(|x| {
                self.forward_into(theta, x, &mut tape);
                tape.post.last().unwrap().clone()
            })
            .collect()
    }

    /// Probabilities for every row of `data`, flattened row-major.
    pub fn predict(&self, theta: &[f64], data: &DenseDataset) -> Vec<f64> {
        self.forward(theta, &data.features).into_iter().flatten().collect()
    }

    /// `-sum_i log p(y_i | x_i)` over `data`.
    pub fn neg_log_likelihood(&self, theta: &[f64], data: &DenseDataset) -> f64 {
        let mut tape = self.tape();
        (0..data.len())
            .map(|i| {
                self.forward_into(theta, data.row(i), &mut tape);
                let l = self.offsets.len() - 1;
                -log_softmax_at(&tape.pre[l], data.labels[i])
            })
            .sum()
    }

    fn backprop_sample(&self, theta: &[f64], i: usize, tape: &mut Tape, out: &mut [f64]) {
        let x = self.data.row(i);
        self.forward_into(theta, x, tape);
        let layers = self.offsets.len();
        // dL/dlogits = p - onehot(y)
        tape.delta.clear();
        tape.delta.extend_from_slice(&tape.post[layers - 1]);
        tape.delta[self.data.labels[i]] -= 1.0;
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let w_off = self.offsets[l];
            let b_off = w_off + n_in * n_out;
            let input: &[f64] = if l == 0 { x } else { &tape.post[l - 1] };
            for o in 0..n_out {
                let d = tape.delta[o];
                if d == 0.0 {
                    continue;
                }
                let g = &mut out[w_off + o * n_in..w_off + (o + 1) * n_in];
                for (gk, &a) in g.iter_mut().zip(input) {
                    *gk += d * a;
                }
                out[b_off + o] += d;
            }
            if l > 0 {
                tape.back.clear();
                tape.back.resize(n_in, 0.0);
                let w = &theta[w_off..b_off];
                for o in 0..n_out {
                    let d = tape.delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    for (bk, &wk) in tape.back.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                        *bk += d * wk;
                    }
                }
                let (pre, post) = (&tape.pre[l - 1], &tape.post[l - 1]);
                for k in 0..n_in {
                    tape.back[k] *= self.activation.derivative(pre[k], post[k]);
                }
                std::mem::swap(&mut tape.delta, &mut tape.back);
            }
        }
    }

    /// Pre-activations of every hidden unit for row `i`; used to keep
    /// finite-difference probes away from ReLU kinks.
    pub fn hidden_preactivations(&self, theta: &[f64], i: usize) -> Vec<f64> {
        let mut tape = self.tape();
        self.forward_into(theta, self.data.row(i), &mut tape);
        let hidden = self.offsets.len() - 1;
        tape.pre[..hidden].iter().flatten().copied().collect()
    }
}

fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = (z - max).exp();
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

fn log_softmax_at(logits: &[f64], k: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits[k] - lse
}

impl GradientModel for MlpModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn data_size(&self) -> usize {
        self.data.len()
    }

    fn neg_log_posterior(&self, theta: &[f64]) -> Option<f64> {
        let prior = theta.iter().map(|t| t * t).sum::<f64>() / (2.0 * self.prior_variance);
        Some(prior + self.neg_log_likelihood(theta, &self.data))
    }

    fn gradient(&self, theta: &[f64], batch: Batch<'_>, out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
        let mut tape = self.tape();
        let n = self.data.len();
        let scale = match batch {
            Batch::Full => {
                (0..n).for_each(|i| self.backprop_sample(theta, i, &mut tape, out));
                1.0
            }
            Batch::Indices(ix) => {
                ix.iter().for_each(|&i| self.backprop_sample(theta, i, &mut tape, out));
                n as f64 / ix.len() as f64
            }
        };
        for (g, t) in out.iter_mut().zip(theta) {
            *g = *g * scale + t / self.prior_variance;
        }
    }
}
