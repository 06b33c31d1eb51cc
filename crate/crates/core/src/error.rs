use std::path::PathBuf;

use crate::corpus::Label;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("too many malformed records: {malformed} of {total} (first: line {first_line}: {first_message})")]
    MalformedCorpus {
        malformed: usize,
        total: usize,
        first_line: usize,
        first_message: String,
    },

    #[error("post {0} has no label")]
    UnlabeledPost(String),

    #[error("duplicate post id {0}")]
    DuplicatePostId(String),

    #[error("invalid UTF-8 in {path} at byte offset {offset}")]
    InvalidUtf8 { path: PathBuf, offset: usize },

    #[error("lexicon {0} has no entries")]
    EmptyLexicon(String),

    #[error("unknown lexicon category {0:?}")]
    UnknownCategory(String),

    #[error("segmentation vocabulary is empty")]
    EmptyVocabulary,

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("n-gram order must be 1, 2 or 3, got {0}")]
    InvalidNgramOrder(usize),

    #[error("training data needs both classes, only {0:?} present")]
    SingleClass(Option<Label>),

    #[error("oversampling target ratio must lie in (0, 1], got {0}")]
    InvalidRatio(f64),

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("feature {index} has non-finite value {value}")]
    NonFiniteFeature { index: usize, value: f64 },

    #[error("feature index {index} outside feature space of dimension {dimension}")]
    FeatureOutOfSpace { index: usize, dimension: usize },

    #[error("cannot split {n} items into {k} folds")]
    InvalidFolds { n: usize, k: usize },

    #[error("training data for fold {fold} lacks class {missing:?}")]
    ClassAbsentFromFold { fold: usize, missing: Label },

    #[error("search grid is empty")]
    EmptyGrid,

    #[error("unsupported manifest version {found} (expected {expected})")]
    ManifestVersion { found: u32, expected: u32 },

    #[error("manifest is inconsistent: {0}")]
    InconsistentManifest(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
