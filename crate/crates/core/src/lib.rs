//! Detection of suicidal-ideation posts in Chinese microblogs.
//!
//! The pipeline segments post text with a lexicon-backed maximum matcher,
//! extracts n-gram, lexicon and behavioral features, reweights them by how
//! strongly each one separates the two classes, and trains one of four
//! classifiers. [`eval`] runs stratified cross-validation on top of it.
//!
//! ```
//! use ideation::{eval, pipeline::PipelineConfig, resources, ClassifierKind};
//!
//! let corpus = eval::synth_corpus(&eval::SynthConfig::new(20, 60, 1.0, 7)).unwrap();
//! let analyzer = resources::builtin_analyzer().unwrap();
//! let config = PipelineConfig::new(ClassifierKind::NaiveBayes);
//! let report = eval::cross_validate(&corpus, &analyzer, &config, 5, 7).unwrap();
//! assert_eq!(report.total.total(), 80);
//! ```

pub mod classify;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod lexicon;
pub mod pipeline;
pub mod resources;
pub mod segment;
pub mod weighting;

pub use classify::{ClassifierKind, Hyperparameters, Prediction, TrainedModel};
pub use corpus::{Corpus, Label, Post, PostType};
pub use error::{Error, Result};
pub use features::{Analyzer, FeatureSpace, FeatureVector, Sample};
pub use lexicon::{Category, Lexicon, LexiconSet};
pub use pipeline::{ModelManifest, PipelineConfig};
