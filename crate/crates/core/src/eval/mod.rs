//! Stratified k-fold cross-validation, the four reported metrics, and an
//! RBF-SVM grid search.

pub mod synth;

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{Hyperparameters, SmoParams};
use crate::corpus::{ClassCounts, Corpus, Label};
use crate::error::{Error, Result};
use crate::features::{Analysis, Analyzer};
use crate::pipeline::{self, derive_seed, ModelManifest, PipelineConfig};

pub use synth::{synth_corpus, SynthConfig};

/// Confusion counts with the suicidal class as positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth, predicted) {
            (Label::Suicidal, Label::Suicidal) => self.tp += 1,
            (Label::NonSuicidal, Label::Suicidal) => self.fp += 1,
            (Label::Suicidal, Label::NonSuicidal) => self.fn_ += 1,
            (Label::NonSuicidal, Label::NonSuicidal) => self.tn += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn merge(&self, other: &ConfusionCounts) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
            tn: self.tn + other.tn,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub accuracy: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall, F-measure and accuracy. Zero denominators give 0.
pub fn metrics(c: &ConfusionCounts) -> Metrics {
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f_measure = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Metrics {
        precision,
        recall,
        f_measure,
        accuracy: ratio(c.tp + c.tn, c.total()),
    }
}

/// Splits `0..n` into `k` disjoint folds whose sizes differ by at most one.
///
/// With labels, positives and negatives are dealt round-robin separately,
/// so per-fold class counts also differ by at most one.
pub fn kfold_split(
    n: usize,
    k: usize,
    seed: u64,
    labels: Option<&[Label]>,
) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::InvalidFolds { n, k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order: Vec<usize> = match labels {
        Some(labels) => {
            assert_eq!(labels.len(), n, "one label per item");
            let mut pos: Vec<usize> = (0..n).filter(|&i| labels[i].is_positive()).collect();
            let mut neg: Vec<usize> = (0..n).filter(|&i| !labels[i].is_positive()).collect();
            pos.shuffle(&mut rng);
            neg.shuffle(&mut rng);
            pos.into_iter().chain(neg).collect()
        }
        None => {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut rng);
            all
        }
    };
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (t, idx) in order.into_iter().enumerate() {
        folds[t % k].push(idx);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classifier: String,
    pub k: usize,
    pub seed: u64,
    pub config: PipelineConfig,
    pub folds: Vec<ConfusionCounts>,
    pub total: ConfusionCounts,
    pub metrics: Metrics,
    /// Folds whose SVM solver exited without meeting the KKT tolerance.
    pub non_converged_folds: Vec<usize>,
}

impl EvalReport {
    /// Human-readable summary in the column order F-measure, Precision,
    /// Recall, Accuracy.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let m = &self.metrics;
        let _ = writeln!(
            out,
            "{:<12} {:>10} {:>10} {:>10} {:>10}",
            "classifier", "F-measure", "Precision", "Recall", "Accuracy"
        );
        let _ = writeln!(
            out,
            "{:<12} {:>9.1}% {:>9.1}% {:>9.1}% {:>9.1}%",
            self.classifier,
            100.0 * m.f_measure,
            100.0 * m.precision,
            100.0 * m.recall,
            100.0 * m.accuracy
        );
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<6} {:>6} {:>6} {:>6} {:>6}",
            "fold", "tp", "fp", "fn", "tn"
        );
        for (i, c) in self.folds.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:<6} {:>6} {:>6} {:>6} {:>6}",
                i, c.tp, c.fp, c.fn_, c.tn
            );
        }
        let t = &self.total;
        let _ = writeln!(
            out,
            "{:<6} {:>6} {:>6} {:>6} {:>6}",
            "total", t.tp, t.fp, t.fn_, t.tn
        );
        let _ = writeln!(out, "k={} seed={}", self.k, self.seed);
        out
    }
}

/// Per-fold artifacts kept alongside the report.
pub struct CrossValidation {
    pub report: EvalReport,
    pub fold_indices: Vec<Vec<usize>>,
    pub models: Vec<ModelManifest>,
}

/// Seed used to fit fold `fold` of a run seeded with `seed`.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    derive_seed(seed, 1000 + fold as u64)
}

pub fn cross_validate(
    corpus: &Corpus,
    analyzer: &Analyzer,
    config: &PipelineConfig,
    k: usize,
    seed: u64,
) -> Result<EvalReport> {
    cross_validate_detailed(corpus, analyzer, config, k, seed).map(|cv| cv.report)
}

/// Cross-validation where the feature space, weighting context, oversampling
/// and classifier of each fold see only that fold's training posts.
pub fn cross_validate_detailed(
    corpus: &Corpus,
    analyzer: &Analyzer,
    config: &PipelineConfig,
    k: usize,
    seed: u64,
) -> Result<CrossValidation> {
    let analyses = pipeline::analyze_corpus(analyzer, corpus);
    cross_validate_analyzed(corpus, &analyses, analyzer, config, k, seed)
}

fn cross_validate_analyzed(
    corpus: &Corpus,
    analyses: &[Analysis],
    analyzer: &Analyzer,
    config: &PipelineConfig,
    k: usize,
    seed: u64,
) -> Result<CrossValidation> {
    config.validate()?;
    let labels = corpus.labels()?;
    let folds = kfold_split(corpus.len(), k, seed, Some(&labels))?;
    let history = corpus.author_history();

    let results: Vec<Result<(ConfusionCounts, ModelManifest)>> = folds
        .par_iter()
        .enumerate()
        .map(|(fold, held_out)| {
            let train_idx = complement(corpus.len(), held_out);
            let mut counts = ClassCounts::default();
            for &i in &train_idx {
                counts.add(labels[i]);
            }
            for missing in [Label::Suicidal, Label::NonSuicidal] {
                if counts.get(missing) == 0 {
                    return Err(Error::ClassAbsentFromFold { fold, missing });
                }
            }
            let train_corpus = corpus.subset(&train_idx);
            let train_analyses: Vec<Analysis> =
                train_idx.iter().map(|&i| analyses[i].clone()).collect();
            let manifest = pipeline::fit_analyzed(
                &train_corpus,
                &train_analyses,
                analyzer,
                config,
                fold_seed(seed, fold),
            )?;
            let mut confusion = ConfusionCounts::default();
            for &i in held_out {
                let post = &corpus.posts()[i];
                let v = manifest.vectorize(post, &analyses[i], history.of(&post.author_id));
                let predicted = manifest.model.predict(&v)?.label;
                confusion.record(labels[i], predicted);
            }
            Ok((confusion, manifest))
        })
        .collect();

    let mut fold_counts = Vec::with_capacity(k);
    let mut models = Vec::with_capacity(k);
    for r in results {
        let (c, m) = r?;
        fold_counts.push(c);
        models.push(m);
    }
    let total = fold_counts
        .iter()
        .fold(ConfusionCounts::default(), |acc, c| acc.merge(c));
    let non_converged_folds = models
        .iter()
        .enumerate()
        .filter(|(_, m)| !m.model.meta.converged)
        .map(|(i, _)| i)
        .collect();
    Ok(CrossValidation {
        report: EvalReport {
            classifier: config.kind().cli_name().to_string(),
            k,
            seed,
            config: *config,
            folds: fold_counts,
            total,
            metrics: metrics(&total),
            non_converged_folds,
        },
        fold_indices: folds,
        models,
    })
}

fn complement(n: usize, held_out: &[usize]) -> Vec<usize> {
    let mut mask = vec![true; n];
    for &i in held_out {
        mask[i] = false;
    }
    (0..n).filter(|&i| mask[i]).collect()
}

fn powers_of_two(exponents: impl IntoIterator<Item = i32>) -> Vec<f64> {
    exponents.into_iter().map(|e| 2f64.powi(e)).collect()
}

/// `2^-5, 2^-3, ..., 2^15` plus `16`.
pub fn default_c_grid() -> Vec<f64> {
    let mut exps: Vec<i32> = (-5..=15).step_by(2).collect();
    exps.push(4);
    exps.sort_unstable();
    powers_of_two(exps)
}

/// `2^-15, 2^-13, ..., 2^3`.
pub fn default_gamma_grid() -> Vec<f64> {
    powers_of_two((-15..=3).step_by(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub c: f64,
    pub gamma: f64,
    pub metrics: Metrics,
    pub non_converged_folds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    pub best_c: f64,
    pub best_gamma: f64,
    pub best: Metrics,
    pub k: usize,
    pub seed: u64,
    /// Every cell, ordered by C then gamma.
    pub cells: Vec<GridCell>,
}

impl GridSearch {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("c\tgamma\tf_measure\tprecision\trecall\taccuracy\n");
        for cell in &self.cells {
            let m = &cell.metrics;
            let _ = writeln!(
                out,
                "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
                cell.c, cell.gamma, m.f_measure, m.precision, m.recall, m.accuracy
            );
        }
        out
    }

    pub fn cell(&self, c: f64, gamma: f64) -> Option<&GridCell> {
        self.cells
            .iter()
            .find(|cell| cell.c == c && cell.gamma == gamma)
    }
}

/// Highest F-measure; among equals, the smallest C and then the smallest gamma.
fn best_cell(cells: &[GridCell]) -> &GridCell {
    cells
        .iter()
        .reduce(|best, cell| {
            let better = cell.metrics.f_measure > best.metrics.f_measure
                || (cell.metrics.f_measure == best.metrics.f_measure
                    && (cell.c, cell.gamma) < (best.c, best.gamma));
            if better {
                cell
            } else {
                best
            }
        })
        .expect("grid is non-empty")
}

/// Cross-validates an RBF SVM at every `(C, gamma)` pair and picks the best
/// F-measure; ties go to the smaller C, then the smaller gamma.
pub fn grid_search(
    corpus: &Corpus,
    analyzer: &Analyzer,
    base: &PipelineConfig,
    c_grid: &[f64],
    gamma_grid: &[f64],
    k: usize,
    seed: u64,
) -> Result<GridSearch> {
    if c_grid.is_empty() || gamma_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut cs = c_grid.to_vec();
    let mut gammas = gamma_grid.to_vec();
    cs.sort_by(f64::total_cmp);
    cs.dedup();
    gammas.sort_by(f64::total_cmp);
    gammas.dedup();
    let smo = match base.hyperparameters {
        Hyperparameters::RbfSvm(p) => p,
        _ => SmoParams::default(),
    };
    let pairs: Vec<(f64, f64)> = cs
        .iter()
        .flat_map(|&c| gammas.iter().map(move |&g| (c, g)))
        .collect();
    let analyses = pipeline::analyze_corpus(analyzer, corpus);

    let cells: Vec<GridCell> = pairs
        .par_iter()
        .map(|&(c, gamma)| {
            let config = PipelineConfig {
                hyperparameters: Hyperparameters::RbfSvm(SmoParams { c, gamma, ..smo }),
                ..*base
            };
            let cv = cross_validate_analyzed(corpus, &analyses, analyzer, &config, k, seed)?;
            Ok(GridCell {
                c,
                gamma,
                metrics: cv.report.metrics,
                non_converged_folds: cv.report.non_converged_folds.len(),
            })
        })
        .collect::<Result<_>>()?;

    let best = best_cell(&cells);
    Ok(GridSearch {
        best_c: best.c,
        best_gamma: best.gamma,
        best: best.metrics,
        k,
        seed,
        cells,
    })
}
