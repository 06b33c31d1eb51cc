//! Binary classifiers over sparse feature vectors: multinomial naive Bayes,
//! logistic regression, linear SVM and RBF-kernel SVM.
//!
//! Scores are oriented so that positive values mean [`Label::Suicidal`]; the
//! decision threshold is fixed at zero.

pub mod linear;
pub mod naive_bayes;
pub mod smo;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{ClassCounts, Label};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, Sample};

pub use smo::rbf_kernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    NaiveBayes,
    LogisticRegression,
    LinearSvm,
    RbfSvm,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::NaiveBayes,
        ClassifierKind::LogisticRegression,
        ClassifierKind::LinearSvm,
        ClassifierKind::RbfSvm,
    ];

    pub fn cli_name(self) -> &'static str {
        match self {
            ClassifierKind::NaiveBayes => "nb",
            ClassifierKind::LogisticRegression => "lr",
            ClassifierKind::LinearSvm => "svm-linear",
            ClassifierKind::RbfSvm => "svm-rbf",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.cli_name() == s)
            .ok_or_else(|| format!("unknown classifier {s:?} (nb, lr, svm-linear, svm-rbf)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for SgdParams {
    fn default() -> Self {
        SgdParams {
            learning_rate: 0.5,
            epochs: 50,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoParams {
    pub c: f64,
    pub gamma: f64,
    pub tolerance: f64,
    pub max_passes: usize,
    /// Cap on sweeps over the training set.
    pub max_iterations: usize,
}

/// Penalty and kernel width found by the grid search on the original data.
pub const REFERENCE_C: f64 = 16.0;
pub const REFERENCE_GAMMA: f64 = 3.0517578125e-5;

impl Default for SmoParams {
    fn default() -> Self {
        SmoParams {
            c: REFERENCE_C,
            gamma: REFERENCE_GAMMA,
            tolerance: 1e-3,
            max_passes: 5,
            max_iterations: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hyperparameters {
    NaiveBayes {
        alpha: f64,
    },
    LogisticRegression(SgdParams),
    LinearSvm {
        c: f64,
        #[serde(flatten)]
        sgd: SgdParams,
    },
    RbfSvm(SmoParams),
}

impl Hyperparameters {
    pub fn default_for(kind: ClassifierKind) -> Self {
        match kind {
            ClassifierKind::NaiveBayes => Hyperparameters::NaiveBayes { alpha: 1.0 },
            ClassifierKind::LogisticRegression => {
                Hyperparameters::LogisticRegression(SgdParams::default())
            }
            ClassifierKind::LinearSvm => Hyperparameters::LinearSvm {
                c: 1.0,
                sgd: SgdParams::default(),
            },
            ClassifierKind::RbfSvm => Hyperparameters::RbfSvm(SmoParams::default()),
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            Hyperparameters::NaiveBayes { .. } => ClassifierKind::NaiveBayes,
            Hyperparameters::LogisticRegression(_) => ClassifierKind::LogisticRegression,
            Hyperparameters::LinearSvm { .. } => ClassifierKind::LinearSvm,
            Hyperparameters::RbfSvm(_) => ClassifierKind::RbfSvm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidHyperparameter(format!(
                    "{name} must be > 0, got {v}"
                )))
            }
        }
        fn sgd(p: &SgdParams) -> Result<()> {
            positive("learning_rate", p.learning_rate)?;
            if p.epochs == 0 {
                return Err(Error::InvalidHyperparameter("epochs must be >= 1".into()));
            }
            if !(p.l2.is_finite() && p.l2 >= 0.0) {
                return Err(Error::InvalidHyperparameter(format!(
                    "l2 must be >= 0, got {}",
                    p.l2
                )));
            }
            Ok(())
        }
        match self {
            Hyperparameters::NaiveBayes { alpha } => positive("alpha", *alpha),
            Hyperparameters::LogisticRegression(p) => sgd(p),
            Hyperparameters::LinearSvm { c, sgd: p } => {
                positive("c", *c)?;
                sgd(p)
            }
            Hyperparameters::RbfSvm(p) => {
                positive("c", p.c)?;
                positive("gamma", p.gamma)?;
                positive("tolerance", p.tolerance)?;
                if p.max_passes == 0 || p.max_iterations == 0 {
                    return Err(Error::InvalidHyperparameter(
                        "max_passes and max_iterations must be >= 1".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Parameters {
    NaiveBayes(naive_bayes::NaiveBayesParams),
    Linear(linear::LinearParams),
    Rbf(smo::RbfParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub samples: usize,
    pub converged: bool,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_kkt_violation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub hyperparameters: Hyperparameters,
    pub dimension: usize,
    pub parameters: Parameters,
    pub meta: TrainingMeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    pub score: f64,
}

impl Prediction {
    pub fn from_score(score: f64) -> Self {
        Prediction {
            label: if score > 0.0 {
                Label::Suicidal
            } else {
                Label::NonSuicidal
            },
            score,
        }
    }
}

fn validate_samples(samples: &[Sample], dimension: usize) -> Result<ClassCounts> {
    let mut counts = ClassCounts::default();
    for s in samples {
        counts.add(s.label);
        for &(index, value) in s.vector.entries() {
            if index >= dimension {
                return Err(Error::FeatureOutOfSpace { index, dimension });
            }
            if !value.is_finite() {
                return Err(Error::NonFiniteFeature { index, value });
            }
        }
    }
    match (counts.suicidal, counts.non_suicidal) {
        (0, 0) => Err(Error::SingleClass(None)),
        (0, _) => Err(Error::SingleClass(Some(Label::NonSuicidal))),
        (_, 0) => Err(Error::SingleClass(Some(Label::Suicidal))),
        _ => Ok(counts),
    }
}

/// Trains a model over `dimension` features. Deterministic given `seed`.
pub fn train(
    hyperparameters: &Hyperparameters,
    samples: &[Sample],
    dimension: usize,
    seed: u64,
) -> Result<TrainedModel> {
    hyperparameters.validate()?;
    validate_samples(samples, dimension)?;
    let mut meta = TrainingMeta {
        seed,
        samples: samples.len(),
        converged: true,
        iterations: 0,
        max_kkt_violation: None,
    };
    let parameters = match *hyperparameters {
        Hyperparameters::NaiveBayes { alpha } => {
            Parameters::NaiveBayes(naive_bayes::fit(samples, dimension, alpha))
        }
        Hyperparameters::LogisticRegression(p) => {
            meta.iterations = p.epochs;
            Parameters::Linear(linear::fit_logistic(samples, dimension, &p, seed))
        }
        Hyperparameters::LinearSvm { c, sgd } => {
            meta.iterations = sgd.epochs;
            Parameters::Linear(linear::fit_hinge(samples, dimension, c, &sgd, seed))
        }
        Hyperparameters::RbfSvm(p) => {
            let (params, report) = smo::fit(samples, &p, seed);
            meta.converged = report.converged;
            meta.iterations = report.iterations;
            meta.max_kkt_violation = Some(report.max_kkt_violation);
            Parameters::Rbf(params)
        }
    };
    Ok(TrainedModel {
        hyperparameters: *hyperparameters,
        dimension,
        parameters,
        meta,
    })
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        self.hyperparameters.kind()
    }

    pub fn decision_value(&self, v: &FeatureVector) -> Result<f64> {
        if let Some(index) = v.max_index().filter(|&i| i >= self.dimension) {
            return Err(Error::FeatureOutOfSpace {
                index,
                dimension: self.dimension,
            });
        }
        Ok(match &self.parameters {
            Parameters::NaiveBayes(p) => p.log_odds(v),
            Parameters::Linear(p) => p.decision(v),
            Parameters::Rbf(p) => p.decision(v),
        })
    }

    pub fn predict(&self, v: &FeatureVector) -> Result<Prediction> {
        self.decision_value(v).map(Prediction::from_score)
    }
}

pub fn predict(model: &TrainedModel, v: &FeatureVector) -> Result<Prediction> {
    model.predict(v)
}
