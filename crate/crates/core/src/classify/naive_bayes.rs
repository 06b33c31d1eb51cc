//! Multinomial naive Bayes with additive smoothing.
//!
//! Feature values act as (possibly fractional) occurrence counts. Negative
//! values carry no multinomial mass and are clamped to zero, both when
//! fitting and when scoring.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::features::{FeatureVector, Sample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesParams {
    pub alpha: f64,
    pub log_prior_suicidal: f64,
    pub log_prior_non_suicidal: f64,
    pub log_likelihood_suicidal: Vec<f64>,
    pub log_likelihood_non_suicidal: Vec<f64>,
}

pub(crate) fn fit(samples: &[Sample], dimension: usize, alpha: f64) -> NaiveBayesParams {
    let mut counts = [vec![0.0; dimension], vec![0.0; dimension]];
    let mut docs = [0usize; 2];
    for s in samples {
        let c = class_slot(s.label);
        docs[c] += 1;
        for &(i, v) in s.vector.entries() {
            counts[c][i] += v.max(0.0);
        }
    }
    let total = docs[0] + docs[1];
    let log_likelihood = |c: &[f64]| -> Vec<f64> {
        let denom = (c.iter().sum::<f64>() + alpha * dimension as f64).ln();
        c.iter().map(|&n| (n + alpha).ln() - denom).collect()
    };
    NaiveBayesParams {
        alpha,
        log_prior_suicidal: (docs[0] as f64 / total as f64).ln(),
        log_prior_non_suicidal: (docs[1] as f64 / total as f64).ln(),
        log_likelihood_suicidal: log_likelihood(&counts[0]),
        log_likelihood_non_suicidal: log_likelihood(&counts[1]),
    }
}

fn class_slot(label: Label) -> usize {
    match label {
        Label::Suicidal => 0,
        Label::NonSuicidal => 1,
    }
}

impl NaiveBayesParams {
    /// `ln P(suicidal | v) - ln P(non_suicidal | v)`.
    pub fn log_odds(&self, v: &FeatureVector) -> f64 {
        let mut score = self.log_prior_suicidal - self.log_prior_non_suicidal;
        for &(i, x) in v.entries() {
            let x = x.max(0.0);
            score += x * (self.log_likelihood_suicidal[i] - self.log_likelihood_non_suicidal[i]);
        }
        score
    }

    /// Posterior probability of the suicidal class.
    pub fn posterior(&self, v: &FeatureVector) -> f64 {
        1.0 / (1.0 + (-self.log_odds(v)).exp())
    }
}
