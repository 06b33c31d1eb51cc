//! Imbalance-aware feature re-weighting and minority oversampling.
//!
//! Each stored feature value `w` is multiplied by
//! `ln(S_s / (S_n + 1)) * (N_n / N_s)`, where `S_s` and `S_n` are the total
//! occurrences of the feature across suicidal and non-suicidal training
//! posts and `N_s`, `N_n` are the class sizes. A feature never seen in a
//! suicidal post uses `1 / (S_n + 1 + N_s)` as the log argument instead,
//! which keeps the weight finite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{ClassCounts, Label};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, Sample, FIXED_SLOTS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightingContext {
    pub suicidal_posts: usize,
    pub non_suicidal_posts: usize,
    /// Per-feature occurrence totals over suicidal posts.
    pub suicidal_totals: Vec<f64>,
    /// Per-feature occurrence totals over non-suicidal posts.
    pub non_suicidal_totals: Vec<f64>,
}

/// Which feature slots the weight function touches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScope {
    #[default]
    All,
    Ngrams,
    Fixed,
}

impl WeightScope {
    pub fn covers(self, index: usize) -> bool {
        match self {
            WeightScope::All => true,
            WeightScope::Ngrams => index >= FIXED_SLOTS,
            WeightScope::Fixed => index < FIXED_SLOTS,
        }
    }
}

impl std::str::FromStr for WeightScope {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "all" => Ok(WeightScope::All),
            "ngrams" => Ok(WeightScope::Ngrams),
            "fixed" => Ok(WeightScope::Fixed),
            other => Err(format!(
                "unknown weight scope {other:?} (all, ngrams, fixed)"
            )),
        }
    }
}

/// Sums per-feature occurrences by class. A value's occurrence is its
/// magnitude, so count features contribute their counts.
pub fn fit_weights(samples: &[Sample], dimension: usize) -> Result<WeightingContext> {
    let mut counts = ClassCounts::default();
    let mut suicidal_totals = vec![0.0; dimension];
    let mut non_suicidal_totals = vec![0.0; dimension];
    for sample in samples {
        counts.add(sample.label);
        let totals = match sample.label {
            Label::Suicidal => &mut suicidal_totals,
            Label::NonSuicidal => &mut non_suicidal_totals,
        };
        for &(i, v) in sample.vector.entries() {
            if i >= dimension {
                return Err(Error::FeatureOutOfSpace {
                    index: i,
                    dimension,
                });
            }
            totals[i] += v.abs();
        }
    }
    match (counts.suicidal, counts.non_suicidal) {
        (0, 0) => return Err(Error::SingleClass(None)),
        (0, _) => return Err(Error::SingleClass(Some(Label::NonSuicidal))),
        (_, 0) => return Err(Error::SingleClass(Some(Label::Suicidal))),
        _ => {}
    }
    Ok(WeightingContext {
        suicidal_posts: counts.suicidal,
        non_suicidal_posts: counts.non_suicidal,
        suicidal_totals,
        non_suicidal_totals,
    })
}

/// The weighted value of one feature. Requires `suicidal_posts >= 1`.
pub fn weight(
    initial: f64,
    suicidal_total: f64,
    non_suicidal_total: f64,
    suicidal_posts: usize,
    non_suicidal_posts: usize,
) -> f64 {
    if initial == 0.0 {
        return 0.0;
    }
    let n_s = suicidal_posts as f64;
    let ratio = if suicidal_total > 0.0 {
        suicidal_total / (non_suicidal_total + 1.0)
    } else {
        1.0 / (non_suicidal_total + 1.0 + n_s)
    };
    initial * ratio.ln() * (non_suicidal_posts as f64 / n_s)
}

impl WeightingContext {
    pub fn dimension(&self) -> usize {
        self.suicidal_totals.len()
    }

    pub fn weight_of(&self, index: usize, initial: f64) -> f64 {
        weight(
            initial,
            self.suicidal_totals[index],
            self.non_suicidal_totals[index],
            self.suicidal_posts,
            self.non_suicidal_posts,
        )
    }

    pub fn apply(&self, v: &FeatureVector, scope: WeightScope) -> FeatureVector {
        v.map_values(|i, x| {
            if scope.covers(i) {
                self.weight_of(i, x)
            } else {
                x
            }
        })
    }
}

/// Re-weights every stored value, or returns `v` unchanged when disabled.
pub fn apply_weights(v: &FeatureVector, ctx: &WeightingContext, enabled: bool) -> FeatureVector {
    if enabled {
        ctx.apply(v, WeightScope::All)
    } else {
        v.clone()
    }
}

/// Duplicates minority samples, drawn uniformly with replacement, until the
/// minority holds at least `target_ratio * majority` samples. Originals keep
/// their order; duplicates are appended.
pub fn oversample(samples: &[Sample], target_ratio: f64, seed: u64) -> Result<Vec<Sample>> {
    if !(target_ratio > 0.0 && target_ratio <= 1.0) {
        return Err(Error::InvalidRatio(target_ratio));
    }
    let mut counts = ClassCounts::default();
    for s in samples {
        counts.add(s.label);
    }
    if counts.suicidal == 0 || counts.non_suicidal == 0 {
        let present = samples.first().map(|s| s.label);
        return Err(Error::SingleClass(present));
    }
    let minority_label = if counts.suicidal <= counts.non_suicidal {
        Label::Suicidal
    } else {
        Label::NonSuicidal
    };
    let minority = counts.get(minority_label);
    let majority = counts.get(minority_label.other());
    let target = minority_target(target_ratio, majority);

    let mut out = samples.to_vec();
    if minority >= target {
        return Ok(out);
    }
    let pool: Vec<&Sample> = samples
        .iter()
        .filter(|s| s.label == minority_label)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    out.extend((minority..target).map(|_| pool[rng.random_range(0..pool.len())].clone()));
    Ok(out)
}

fn minority_target(ratio: f64, majority: usize) -> usize {
    // tolerate products like 0.1 * 30 landing just above an integer
    (ratio * majority as f64 - 1e-9).ceil().max(0.0) as usize
}
