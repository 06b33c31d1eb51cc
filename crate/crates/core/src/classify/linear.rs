//! Linear models trained by stochastic subgradient descent.
//!
//! Both models minimize `mean_i loss(y_i * f(x_i)) + l2 / 2 * ||w||^2` with
//! `f(x) = w . x + b`. The bias is not regularized. Each epoch visits the
//! samples in a fresh seeded shuffle, with step size `learning_rate / (1 + epoch)`
//! divided by the mean squared norm of the (bias-augmented) training vectors.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SgdParams;
use crate::features::{FeatureVector, Sample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearParams {
    pub fn decision(&self, v: &FeatureVector) -> f64 {
        v.dot_dense(&self.weights) + self.bias
    }
}

/// `ln(1 + e^(-m))` without overflow.
fn log_loss(margin: f64) -> f64 {
    if margin > 0.0 {
        (-margin).exp().ln_1p()
    } else {
        -margin + margin.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Full-batch regularized logistic loss and its gradient.
pub fn logistic_loss_and_gradient(
    params: &LinearParams,
    samples: &[Sample],
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = samples.len() as f64;
    let mut grad = params.weights.iter().map(|w| l2 * w).collect::<Vec<_>>();
    let mut grad_bias = 0.0;
    let mut loss = 0.5 * l2 * params.weights.iter().map(|w| w * w).sum::<f64>();
    for s in samples {
        let y = s.label.sign();
        let margin = y * params.decision(&s.vector);
        loss += log_loss(margin) / n;
        let d = -y * sigmoid(-margin) / n;
        grad_bias += d;
        for &(i, x) in s.vector.entries() {
            grad[i] += d * x;
        }
    }
    (loss, grad, grad_bias)
}

// Weight vector stored as `scale * raw` so the L2 shrink is O(1) per step.
struct ScaledWeights {
    raw: Vec<f64>,
    scale: f64,
}

impl ScaledWeights {
    fn dot(&self, v: &FeatureVector) -> f64 {
        self.scale * v.dot_dense(&self.raw)
    }

    fn shrink(&mut self, factor: f64) {
        if factor <= 0.0 {
            self.raw.iter_mut().for_each(|w| *w = 0.0);
            self.scale = 1.0;
            return;
        }
        self.scale *= factor;
        if self.scale < 1e-9 {
            let s = self.scale;
            self.raw.iter_mut().for_each(|w| *w *= s);
            self.scale = 1.0;
        }
    }

    fn add(&mut self, v: &FeatureVector, coeff: f64) {
        let c = coeff / self.scale;
        for &(i, x) in v.entries() {
            self.raw[i] += c * x;
        }
    }

    fn into_weights(self) -> Vec<f64> {
        let s = self.scale;
        self.raw.into_iter().map(|w| w * s).collect()
    }
}

/// Inverse mean of `||x||^2 + 1`, the bias acting as a constant feature, so
/// the same learning rate works whatever the feature magnitudes.
fn step_scale(samples: &[Sample]) -> f64 {
    if samples.is_empty() {
        return 1.0;
    }
    let mean = samples
        .iter()
        .map(|s| s.vector.squared_norm() + 1.0)
        .sum::<f64>()
        / samples.len() as f64;
    1.0 / mean
}

/// `dloss/df` for one sample, given its label sign and current score.
fn sgd<F>(samples: &[Sample], dimension: usize, p: &SgdParams, seed: u64, dloss: F) -> LinearParams
where
    F: Fn(f64, f64) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut w = ScaledWeights {
        raw: vec![0.0; dimension],
        scale: 1.0,
    };
    let mut bias = 0.0;
    let scale = step_scale(samples);
    for epoch in 0..p.epochs {
        let eta = p.learning_rate * scale / (1.0 + epoch as f64);
        order.shuffle(&mut rng);
        for &k in &order {
            let s = &samples[k];
            let y = s.label.sign();
            let score = w.dot(&s.vector) + bias;
            let g = dloss(y, score);
            w.shrink(1.0 - eta * p.l2);
            if g != 0.0 {
                w.add(&s.vector, -eta * g);
                bias -= eta * g;
            }
        }
    }
    LinearParams {
        weights: w.into_weights(),
        bias,
    }
}

pub(crate) fn fit_logistic(
    samples: &[Sample],
    dimension: usize,
    p: &SgdParams,
    seed: u64,
) -> LinearParams {
    sgd(samples, dimension, p, seed, |y, score| {
        -y * sigmoid(-y * score)
    })
}

pub(crate) fn fit_hinge(
    samples: &[Sample],
    dimension: usize,
    c: f64,
    p: &SgdParams,
    seed: u64,
) -> LinearParams {
    sgd(samples, dimension, p, seed, |y, score| {
        if y * score < 1.0 {
            -c * y
        } else {
            0.0
        }
    })
}
