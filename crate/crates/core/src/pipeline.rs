//! End-to-end training and scoring: feature space, weighting context,
//! oversampling and classifier, fit together on one set of training posts.
//!
//! A [`ModelManifest`] carries everything needed to score new posts the same
//! way: the analyzer's lexicons, the feature space, the weighting context and
//! the classifier parameters.

use serde::{Deserialize, Serialize};

use crate::classify::{self, ClassifierKind, Hyperparameters, Prediction, TrainedModel};
use crate::corpus::{Corpus, Post};
use crate::error::{Error, Result};
use crate::features::{
    featurize_analyzed, Analysis, Analyzer, FeatureSpace, FeatureVector, Sample,
    DEFAULT_MIN_NGRAM_COUNT,
};
use crate::weighting::{self, WeightScope, WeightingContext};

pub const MODEL_MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub min_ngram_count: usize,
    pub weighting: bool,
    pub weight_scope: WeightScope,
    /// Minority-to-majority target ratio; `None` disables oversampling.
    pub oversample_ratio: Option<f64>,
    pub hyperparameters: Hyperparameters,
}

impl PipelineConfig {
    pub fn new(kind: ClassifierKind) -> Self {
        PipelineConfig {
            min_ngram_count: DEFAULT_MIN_NGRAM_COUNT,
            weighting: true,
            weight_scope: WeightScope::All,
            oversample_ratio: None,
            hyperparameters: Hyperparameters::default_for(kind),
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        self.hyperparameters.kind()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.oversample_ratio {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::InvalidRatio(r));
            }
        }
        self.hyperparameters.validate()
    }
}

/// Independent seed streams derived from one run seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const OVERSAMPLE_STREAM: u64 = 1;
const TRAIN_STREAM: u64 = 2;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelManifest {
    pub version: u32,
    pub seed: u64,
    pub config: PipelineConfig,
    pub analyzer: Analyzer,
    pub feature_space: FeatureSpace,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weighting: Option<WeightingContext>,
    pub model: TrainedModel,
}

impl ModelManifest {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: ModelManifest = serde_json::from_str(s)?;
        if m.version != MODEL_MANIFEST_VERSION {
            return Err(Error::ManifestVersion {
                found: m.version,
                expected: MODEL_MANIFEST_VERSION,
            });
        }
        let dim = m.feature_space.dimension();
        if m.model.dimension != dim || m.weighting.as_ref().is_some_and(|w| w.dimension() != dim) {
            return Err(Error::InconsistentManifest(
                "model, weighting and feature space dimensions differ".into(),
            ));
        }
        Ok(m)
    }

    /// Weighted feature vector for a post, given the other posts' history.
    pub fn vectorize(
        &self,
        post: &Post,
        analysis: &Analysis,
        history: &[chrono::NaiveDateTime],
    ) -> FeatureVector {
        let raw = featurize_analyzed(post, analysis, &self.feature_space, history);
        match &self.weighting {
            Some(ctx) => ctx.apply(&raw, self.config.weight_scope),
            None => raw,
        }
    }

    /// Scores every post in corpus order. Posting-frequency features use the
    /// author histories found in `corpus` itself.
    pub fn predict_corpus(&self, corpus: &Corpus) -> Result<Vec<Prediction>> {
        let history = corpus.author_history();
        corpus
            .posts()
            .iter()
            .map(|post| {
                let analysis = self.analyzer.analyze(&post.text);
                let v = self.vectorize(post, &analysis, history.of(&post.author_id));
                self.model.predict(&v)
            })
            .collect()
    }
}

pub fn analyze_corpus(analyzer: &Analyzer, corpus: &Corpus) -> Vec<Analysis> {
    corpus
        .posts()
        .iter()
        .map(|p| analyzer.analyze(&p.text))
        .collect()
}

/// Training vectors after feature extraction and optional weighting, but
/// before oversampling.
pub struct TrainingSet {
    pub space: FeatureSpace,
    pub weighting: Option<WeightingContext>,
    pub samples: Vec<Sample>,
}

pub fn build_training_set(
    corpus: &Corpus,
    analyses: &[Analysis],
    config: &PipelineConfig,
) -> Result<TrainingSet> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let labels = corpus.labels()?;
    let space = FeatureSpace::from_token_sequences(
        analyses.iter().map(|a| &a.tokens),
        config.min_ngram_count,
    )?;
    let history = corpus.author_history();
    let raw: Vec<Sample> = corpus
        .posts()
        .iter()
        .zip(analyses)
        .zip(labels)
        .map(|((post, analysis), label)| Sample {
            vector: featurize_analyzed(post, analysis, &space, history.of(&post.author_id)),
            label,
        })
        .collect();
    let (weighting, samples) = if config.weighting {
        let ctx = weighting::fit_weights(&raw, space.dimension())?;
        let weighted = raw
            .into_iter()
            .map(|s| Sample {
                vector: ctx.apply(&s.vector, config.weight_scope),
                label: s.label,
            })
            .collect();
        (Some(ctx), weighted)
    } else {
        (None, raw)
    };
    Ok(TrainingSet {
        space,
        weighting,
        samples,
    })
}

/// Fits the whole pipeline on the labeled posts of `corpus`.
pub fn fit(
    corpus: &Corpus,
    analyzer: &Analyzer,
    config: &PipelineConfig,
    seed: u64,
) -> Result<ModelManifest> {
    let analyses = analyze_corpus(analyzer, corpus);
    fit_analyzed(corpus, &analyses, analyzer, config, seed)
}

pub(crate) fn fit_analyzed(
    corpus: &Corpus,
    analyses: &[Analysis],
    analyzer: &Analyzer,
    config: &PipelineConfig,
    seed: u64,
) -> Result<ModelManifest> {
    config.validate()?;
    let TrainingSet {
        space,
        weighting,
        samples,
    } = build_training_set(corpus, analyses, config)?;
    let samples = match config.oversample_ratio {
        Some(ratio) => {
            weighting::oversample(&samples, ratio, derive_seed(seed, OVERSAMPLE_STREAM))?
        }
        None => samples,
    };
    let model = classify::train(
        &config.hyperparameters,
        &samples,
        space.dimension(),
        derive_seed(seed, TRAIN_STREAM),
    )?;
    Ok(ModelManifest {
        version: MODEL_MANIFEST_VERSION,
        seed,
        config: *config,
        analyzer: analyzer.clone(),
        feature_space: space,
        weighting,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_timestamp, Label, PostType};
    use crate::resources::builtin_analyzer;

    fn post(id: usize, text: &str, label: Label) -> Post {
        Post {
            id: format!("p{id}"),
            author_id: format!("u{}", id % 4),
            text: text.into(),
            posted_at: parse_timestamp(&format!("2013-04-{:02}T{:02}:15", 1 + id % 20, id % 24))
                .unwrap(),
            post_type: if label == Label::Suicidal {
                PostType::Original
            } else {
                PostType::Forward
            },
            label: Some(label),
        }
    }

    fn toy_corpus() -> Corpus {
        let mut posts = Vec::new();
        for i in 0..12 {
            posts.push(post(i, "我很痛苦，不想活了，安眠药", Label::Suicidal));
        }
        for i in 12..40 {
            posts.push(post(
                i,
                "今天天气好，和朋友一起吃火锅，开心",
                Label::NonSuicidal,
            ));
        }
        Corpus::new(posts).unwrap()
    }

    #[test]
    fn fit_and_predict_every_classifier() {
        let corpus = toy_corpus();
        let analyzer = builtin_analyzer().unwrap();
        for kind in ClassifierKind::ALL {
            let mut config = PipelineConfig::new(kind);
            config.oversample_ratio = Some(1.0);
            let manifest = fit(&corpus, &analyzer, &config, 5).unwrap();
            let preds = manifest.predict_corpus(&corpus).unwrap();
            assert_eq!(preds.len(), corpus.len());
            let correct = preds
                .iter()
                .zip(corpus.posts())
                .filter(|(p, post)| Some(p.label) == post.label)
                .count();
            assert_eq!(correct, corpus.len(), "{kind}");
        }
    }

    #[test]
    fn manifest_round_trips_bit_exactly() {
        let corpus = toy_corpus();
        let analyzer = builtin_analyzer().unwrap();
        let manifest = fit(
            &corpus,
            &analyzer,
            &PipelineConfig::new(ClassifierKind::RbfSvm),
            1,
        )
        .unwrap();
        let json = manifest.to_json().unwrap();
        let back = ModelManifest::from_json(&json).unwrap();
        assert_eq!(back.to_json().unwrap(), json);
        assert_eq!(
            back.predict_corpus(&corpus).unwrap(),
            manifest.predict_corpus(&corpus).unwrap()
        );
    }

    #[test]
    fn manifest_version_checked() {
        let corpus = toy_corpus();
        let analyzer = builtin_analyzer().unwrap();
        let manifest = fit(
            &corpus,
            &analyzer,
            &PipelineConfig::new(ClassifierKind::NaiveBayes),
            1,
        )
        .unwrap();
        let json = manifest
            .to_json()
            .unwrap()
            .replacen("\"version\": 1", "\"version\": 7", 1);
        assert!(matches!(
            ModelManifest::from_json(&json),
            Err(Error::ManifestVersion { found: 7, .. })
        ));
    }

    #[test]
    fn unlabeled_training_post_is_rejected() {
        let mut posts = toy_corpus().posts().to_vec();
        posts[3].label = None;
        let corpus = Corpus::new(posts).unwrap();
        let err = fit(
            &corpus,
            &builtin_analyzer().unwrap(),
            &PipelineConfig::new(ClassifierKind::LogisticRegression),
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnlabeledPost(id) if id == "p3"));
    }

    #[test]
    fn seeds_are_distinct_streams() {
        assert_ne!(derive_seed(1, 1), derive_seed(1, 2));
        assert_ne!(derive_seed(1, 1), derive_seed(2, 1));
        assert_eq!(derive_seed(9, 3), derive_seed(9, 3));
    }
}
