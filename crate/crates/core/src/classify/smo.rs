//! RBF-kernel SVM trained with simplified sequential minimal optimization.
//!
//! Each sweep visits every multiplier; one that violates the KKT conditions
//! by more than `tolerance` is optimized jointly with a randomly chosen
//! partner. Training stops after `max_passes` consecutive sweeps without a
//! change, or after `max_iterations` sweeps. The exit solution is then
//! checked against the KKT conditions with freshly computed decision values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SmoParams;
use crate::features::{FeatureVector, Sample};

/// Smallest multiplier change worth applying.
const MIN_STEP: f64 = 1e-5;
/// Up to this many points the kernel matrix is precomputed.
const DENSE_LIMIT: usize = 2048;

pub fn rbf_kernel(x: &FeatureVector, y: &FeatureVector, gamma: f64) -> f64 {
    (-gamma * x.squared_distance(y)).exp()
}

/// RBF kernel matrix over a fixed point set, dense or computed on demand.
pub struct Gram<'a> {
    points: Vec<&'a FeatureVector>,
    gamma: f64,
    dense: Option<Vec<f64>>,
}

impl<'a> Gram<'a> {
    pub fn new(points: Vec<&'a FeatureVector>, gamma: f64) -> Self {
        let n = points.len();
        let dense = (n <= DENSE_LIMIT).then(|| {
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                m[i * n + i] = 1.0;
                for j in 0..i {
                    let k = rbf_kernel(points[i], points[j], gamma);
                    m[i * n + j] = k;
                    m[j * n + i] = k;
                }
            }
            m
        });
        Gram {
            points,
            gamma,
            dense,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.dense {
            Some(m) => m[i * self.points.len() + j],
            None if i == j => 1.0,
            None => rbf_kernel(self.points[i], self.points[j], self.gamma),
        }
    }

    fn row_into(&self, i: usize, buf: &mut Vec<f64>) {
        let n = self.points.len();
        buf.clear();
        match &self.dense {
            Some(m) => buf.extend_from_slice(&m[i * n..(i + 1) * n]),
            None => buf.extend((0..n).map(|j| self.get(i, j))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub iterations: usize,
    pub max_kkt_violation: f64,
}

/// `sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij`.
pub fn dual_objective(alphas: &[f64], labels: &[f64], gram: &Gram<'_>) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alphas[i] * alphas[j] * labels[i] * labels[j] * gram.get(i, j);
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// Largest KKT violation of a solution, measured on `y_i f(x_i) - 1`.
pub fn max_kkt_violation(
    alphas: &[f64],
    labels: &[f64],
    bias: f64,
    c: f64,
    gram: &Gram<'_>,
) -> f64 {
    let support: Vec<usize> = (0..alphas.len()).filter(|&k| alphas[k] > 0.0).collect();
    (0..alphas.len())
        .map(|i| {
            let f: f64 = support
                .iter()
                .map(|&k| alphas[k] * labels[k] * gram.get(k, i))
                .sum::<f64>()
                + bias;
            let r = labels[i] * f - 1.0;
            if alphas[i] <= 0.0 {
                (-r).max(0.0)
            } else if alphas[i] >= c {
                r.max(0.0)
            } else {
                r.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Solves the soft-margin dual for labels in `{-1, +1}`.
pub fn solve(gram: &Gram<'_>, labels: &[f64], params: &SmoParams, seed: u64) -> SmoSolution {
    let n = gram.len();
    let c = params.c;
    let tol = params.tolerance;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut alphas = vec![0.0; n];
    let mut bias = 0.0;
    // errors[k] = f(x_k) - y_k
    let mut errors: Vec<f64> = labels.iter().map(|y| -y).collect();
    let (mut row_i, mut row_j) = (Vec::with_capacity(n), Vec::with_capacity(n));

    let mut passes = 0;
    let mut iterations = 0;
    while n >= 2 && passes < params.max_passes && iterations < params.max_iterations {
        let mut changed = 0;
        for i in 0..n {
            let (yi, ei) = (labels[i], errors[i]);
            let ri = yi * ei;
            if !((ri < -tol && alphas[i] < c) || (ri > tol && alphas[i] > 0.0)) {
                continue;
            }
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let (yj, ej) = (labels[j], errors[j]);
            let (ai_old, aj_old) = (alphas[i], alphas[j]);
            let (lo, hi) = if yi != yj {
                ((aj_old - ai_old).max(0.0), (c + aj_old - ai_old).min(c))
            } else {
                ((ai_old + aj_old - c).max(0.0), (ai_old + aj_old).min(c))
            };
            if hi - lo < 1e-12 {
                continue;
            }
            let (kii, kjj, kij) = (gram.get(i, i), gram.get(j, j), gram.get(i, j));
            let eta = 2.0 * kij - kii - kjj;
            if eta >= 0.0 {
                continue;
            }
            let aj = (aj_old - yj * (ei - ej) / eta).clamp(lo, hi);
            if (aj - aj_old).abs() < MIN_STEP {
                continue;
            }
            let ai = (ai_old + yi * yj * (aj_old - aj)).clamp(0.0, c);
            let (dai, daj) = (ai - ai_old, aj - aj_old);

            let b1 = bias - ei - yi * dai * kii - yj * daj * kij;
            let b2 = bias - ej - yi * dai * kij - yj * daj * kjj;
            let new_bias = if ai > 0.0 && ai < c {
                b1
            } else if aj > 0.0 && aj < c {
                b2
            } else {
                0.5 * (b1 + b2)
            };

            gram.row_into(i, &mut row_i);
            gram.row_into(j, &mut row_j);
            let db = new_bias - bias;
            for k in 0..n {
                errors[k] += yi * dai * row_i[k] + yj * daj * row_j[k] + db;
            }
            alphas[i] = ai;
            alphas[j] = aj;
            bias = new_bias;
            changed += 1;
        }
        iterations += 1;
        if changed == 0 {
            passes += 1;
        } else {
            passes = 0;
        }
    }

    let max_kkt_violation = max_kkt_violation(&alphas, labels, bias, c, gram);
    SmoSolution {
        alphas,
        bias,
        converged: max_kkt_violation <= tol,
        iterations,
        max_kkt_violation,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfParams {
    pub gamma: f64,
    pub support_vectors: Vec<FeatureVector>,
    /// `alpha_i * y_i` for each support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
}

impl RbfParams {
    pub fn decision(&self, v: &FeatureVector) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, coef)| coef * rbf_kernel(sv, v, self.gamma))
            .sum::<f64>()
            + self.bias
    }
}

pub(crate) struct SmoReport {
    pub converged: bool,
    pub iterations: usize,
    pub max_kkt_violation: f64,
}

pub(crate) fn fit(samples: &[Sample], params: &SmoParams, seed: u64) -> (RbfParams, SmoReport) {
    let gram = Gram::new(samples.iter().map(|s| &s.vector).collect(), params.gamma);
    let labels: Vec<f64> = samples.iter().map(|s| s.label.sign()).collect();
    let sol = solve(&gram, &labels, params, seed);
    let (support_vectors, coefficients) = samples
        .iter()
        .zip(&sol.alphas)
        .zip(&labels)
        .filter(|((_, &a), _)| a > 0.0)
        .map(|((s, &a), &y)| (s.vector.clone(), a * y))
        .unzip();
    (
        RbfParams {
            gamma: params.gamma,
            support_vectors,
            coefficients,
            bias: sol.bias,
        },
        SmoReport {
            converged: sol.converged,
            iterations: sol.iterations,
            max_kkt_violation: sol.max_kkt_violation,
        },
    )
}
