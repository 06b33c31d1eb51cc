//! Sparse per-post feature vectors over a feature space frozen at training time.
//!
//! The space starts with a fixed block of lexical, temporal and behavioral
//! slots, followed by the unigram, bigram and trigram inventory.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label, Post, PostType};
use crate::error::{Error, Result};
use crate::lexicon::{CategoryCounts, Lexicon, LexiconSet};
use crate::segment::{Segmenter, TokenSequence};

pub const FEATURE_SPACE_VERSION: u32 = 1;
pub const DEFAULT_MIN_NGRAM_COUNT: usize = 2;
pub const MAX_NGRAM_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeBin {
    Night,
    Morning,
    Afternoon,
    Evening,
}

impl TimeBin {
    pub const ALL: [TimeBin; 4] = [
        TimeBin::Night,
        TimeBin::Morning,
        TimeBin::Afternoon,
        TimeBin::Evening,
    ];

    /// Night is [23, 7), morning [7, 14), afternoon [14, 18), evening [18, 23).
    pub fn from_hour(hour: u32) -> TimeBin {
        match hour % 24 {
            7..=13 => TimeBin::Morning,
            14..=17 => TimeBin::Afternoon,
            18..=22 => TimeBin::Evening,
            _ => TimeBin::Night,
        }
    }

    fn slot(self) -> FixedSlot {
        match self {
            TimeBin::Night => FixedSlot::NightBin,
            TimeBin::Morning => FixedSlot::MorningBin,
            TimeBin::Afternoon => FixedSlot::AfternoonBin,
            TimeBin::Evening => FixedSlot::EveningBin,
        }
    }
}

pub fn time_bin(posted_at: &NaiveDateTime) -> TimeBin {
    TimeBin::from_hour(posted_at.hour())
}

/// Negative-to-positive emotion word ratio with add-one smoothing.
pub fn neg_pos_ratio(negative: usize, positive: usize) -> f64 {
    negative as f64 / (positive as f64 + 1.0)
}

/// Log ratio between the author's post count on this post's calendar day
/// and the author's mean posts per active day.
///
/// `history` holds the posting times of all of the author's posts,
/// including this one.
pub fn posting_freq_deviation(posted_at: &NaiveDateTime, history: &[NaiveDateTime]) -> f64 {
    if history.len() <= 1 {
        return 0.0;
    }
    let day = posted_at.date();
    let same_day = history.iter().filter(|t| t.date() == day).count();
    let active_days = history
        .iter()
        .map(|t| t.date())
        .collect::<BTreeSet<_>>()
        .len();
    let mean = history.len() as f64 / active_days as f64;
    if same_day == 0 || mean == 0.0 {
        return 0.0;
    }
    (same_day as f64 / mean).ln()
}

/// All contiguous n-grams of `order`, joined with a single space.
pub fn extract_ngrams<S: AsRef<str>>(tokens: &[S], order: usize) -> Result<Vec<String>> {
    if !(1..=MAX_NGRAM_ORDER).contains(&order) {
        return Err(Error::InvalidNgramOrder(order));
    }
    Ok(tokens
        .windows(order)
        .map(|w| {
            let parts: Vec<&str> = w.iter().map(AsRef::as_ref).collect();
            parts.join(" ")
        })
        .collect())
}

fn ngram_feature_name(order: usize, gram: &str) -> String {
    format!("{order}g:{gram}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FixedSlot {
    PositiveCount,
    NegativeCount,
    NegPosRatio,
    PsychCount,
    SelfRefCount,
    OtherRefCount,
    AdjectiveCount,
    NounCount,
    VerbCount,
    NightBin,
    MorningBin,
    AfternoonBin,
    EveningBin,
    IsOriginal,
    PostingFreqDeviation,
}

impl FixedSlot {
    pub const ALL: [FixedSlot; 15] = [
        FixedSlot::PositiveCount,
        FixedSlot::NegativeCount,
        FixedSlot::NegPosRatio,
        FixedSlot::PsychCount,
        FixedSlot::SelfRefCount,
        FixedSlot::OtherRefCount,
        FixedSlot::AdjectiveCount,
        FixedSlot::NounCount,
        FixedSlot::VerbCount,
        FixedSlot::NightBin,
        FixedSlot::MorningBin,
        FixedSlot::AfternoonBin,
        FixedSlot::EveningBin,
        FixedSlot::IsOriginal,
        FixedSlot::PostingFreqDeviation,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            FixedSlot::PositiveCount => "positive_count",
            FixedSlot::NegativeCount => "negative_count",
            FixedSlot::NegPosRatio => "neg_pos_ratio",
            FixedSlot::PsychCount => "psych_count",
            FixedSlot::SelfRefCount => "self_ref_count",
            FixedSlot::OtherRefCount => "other_ref_count",
            FixedSlot::AdjectiveCount => "adjective_count",
            FixedSlot::NounCount => "noun_count",
            FixedSlot::VerbCount => "verb_count",
            FixedSlot::NightBin => "time_bin:night",
            FixedSlot::MorningBin => "time_bin:morning",
            FixedSlot::AfternoonBin => "time_bin:afternoon",
            FixedSlot::EveningBin => "time_bin:evening",
            FixedSlot::IsOriginal => "is_original",
            FixedSlot::PostingFreqDeviation => "posting_freq_deviation",
        }
    }
}

pub const FIXED_SLOTS: usize = FixedSlot::ALL.len();

/// Dense, contiguous feature indices; immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FeatureSpaceManifest", into = "FeatureSpaceManifest")]
pub struct FeatureSpace {
    names: Vec<String>,
    index: HashMap<String, usize>,
    min_ngram_count: usize,
}

#[derive(Serialize, Deserialize)]
struct FeatureSpaceManifest {
    version: u32,
    min_ngram_count: usize,
    /// Feature names in index order.
    features: Vec<String>,
}

impl From<FeatureSpace> for FeatureSpaceManifest {
    fn from(space: FeatureSpace) -> Self {
        FeatureSpaceManifest {
            version: FEATURE_SPACE_VERSION,
            min_ngram_count: space.min_ngram_count,
            features: space.names,
        }
    }
}

impl TryFrom<FeatureSpaceManifest> for FeatureSpace {
    type Error = Error;

    fn try_from(m: FeatureSpaceManifest) -> Result<Self> {
        if m.version != FEATURE_SPACE_VERSION {
            return Err(Error::ManifestVersion {
                found: m.version,
                expected: FEATURE_SPACE_VERSION,
            });
        }
        let fixed_ok = m.features.len() >= FIXED_SLOTS
            && FixedSlot::ALL
                .iter()
                .zip(&m.features)
                .all(|(slot, name)| slot.name() == name);
        if !fixed_ok {
            return Err(Error::InconsistentManifest(
                "feature space does not start with the fixed slots".into(),
            ));
        }
        FeatureSpace::from_names(m.features, m.min_ngram_count)
    }
}

impl FeatureSpace {
    fn from_names(names: Vec<String>, min_ngram_count: usize) -> Result<Self> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::InconsistentManifest(format!(
                    "duplicate feature name {name:?}"
                )));
            }
        }
        Ok(FeatureSpace {
            names,
            index,
            min_ngram_count,
        })
    }

    /// Builds the space from tokenized training posts. An n-gram enters the
    /// inventory when its total occurrence count reaches `min_ngram_count`.
    pub fn from_token_sequences<'a, I>(sequences: I, min_ngram_count: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a TokenSequence>,
    {
        let mut counts: [BTreeMap<String, usize>; MAX_NGRAM_ORDER] = Default::default();
        let mut posts = 0usize;
        for seq in sequences {
            posts += 1;
            for (order, table) in (1..=MAX_NGRAM_ORDER).zip(counts.iter_mut()) {
                for gram in extract_ngrams(&seq.tokens, order)? {
                    *table.entry(gram).or_default() += 1;
                }
            }
        }
        if posts == 0 {
            return Err(Error::EmptyCorpus);
        }
        let mut names: Vec<String> = FixedSlot::ALL
            .iter()
            .map(|s| s.name().to_string())
            .collect();
        for (order, table) in (1..=MAX_NGRAM_ORDER).zip(counts) {
            names.extend(
                table
                    .into_iter()
                    .filter(|&(_, c)| c >= min_ngram_count)
                    .map(|(gram, _)| ngram_feature_name(order, &gram)),
            );
        }
        FeatureSpace::from_names(names, min_ngram_count)
    }

    pub fn dimension(&self) -> usize {
        self.names.len()
    }

    pub fn ngram_slots(&self) -> usize {
        self.names.len() - FIXED_SLOTS
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn ngram_index(&self, order: usize, gram: &str) -> Option<usize> {
        self.index.get(&ngram_feature_name(order, gram)).copied()
    }

    pub fn is_ngram(&self, index: usize) -> bool {
        index >= FIXED_SLOTS
    }

    pub fn min_ngram_count(&self) -> usize {
        self.min_ngram_count
    }

    /// N-grams of each order present in the inventory.
    pub fn ngrams_of_order(&self, order: usize) -> Vec<&str> {
        let prefix = format!("{order}g:");
        self.names
            .iter()
            .filter_map(|n| n.strip_prefix(prefix.as_str()))
            .collect()
    }
}

/// Sparse feature values sorted by index. Zeros are never stored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector {
    entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    /// Duplicate indices are summed; zero results are dropped.
    pub fn from_pairs<I: IntoIterator<Item = (usize, f64)>>(pairs: I) -> Self {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, v) in pairs {
            *acc.entry(i).or_default() += v;
        }
        FeatureVector {
            entries: acc.into_iter().filter(|&(_, v)| v != 0.0).collect(),
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(0.0, |pos| self.entries[pos].1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|&(i, _)| i)
    }

    /// Replaces every stored value; zero results are dropped.
    pub fn map_values(&self, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        FeatureVector {
            entries: self
                .entries
                .iter()
                .map(|&(i, v)| (i, f(i, v)))
                .filter(|&(_, v)| v != 0.0)
                .collect(),
        }
    }

    pub fn dot_dense(&self, weights: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| weights[i] * v).sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum()
    }

    /// `||self - other||^2` over the union of stored indices.
    pub fn squared_distance(&self, other: &FeatureVector) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        let mut sum = 0.0;
        while i < a.len() && j < b.len() {
            let (ia, va) = a[i];
            let (ib, vb) = b[j];
            if ia == ib {
                let d = va - vb;
                sum += d * d;
                i += 1;
                j += 1;
            } else if ia < ib {
                sum += va * va;
                i += 1;
            } else {
                sum += vb * vb;
                j += 1;
            }
        }
        sum += a[i..].iter().map(|&(_, v)| v * v).sum::<f64>();
        sum += b[j..].iter().map(|&(_, v)| v * v).sum::<f64>();
        sum
    }
}

/// A feature vector with its class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub vector: FeatureVector,
    pub label: Label,
}

/// Tokens and lexicon counts for one post.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub tokens: TokenSequence,
    pub counts: CategoryCounts,
}

/// Segmenter plus lexicons: everything needed to turn text into tokens and
/// category counts. Serializes as its lexicons and extra vocabulary.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "AnalyzerManifest", into = "AnalyzerManifest")]
pub struct Analyzer {
    lexicons: LexiconSet,
    vocabulary: Vec<String>,
    segmenter: Segmenter,
}

#[derive(Serialize, Deserialize)]
struct AnalyzerManifest {
    lexicons: Vec<Lexicon>,
    vocabulary: Vec<String>,
}

impl From<Analyzer> for AnalyzerManifest {
    fn from(a: Analyzer) -> Self {
        AnalyzerManifest {
            lexicons: a.lexicons.lexicons().to_vec(),
            vocabulary: a.vocabulary,
        }
    }
}

impl TryFrom<AnalyzerManifest> for Analyzer {
    type Error = Error;

    fn try_from(m: AnalyzerManifest) -> Result<Self> {
        Analyzer::new(m.lexicons, m.vocabulary)
    }
}

impl Analyzer {
    pub fn new(lexicons: Vec<Lexicon>, vocabulary: Vec<String>) -> Result<Self> {
        let lexicons = LexiconSet::new(lexicons);
        let segmenter = Segmenter::from_lexicons(&lexicons, vocabulary.iter().cloned())?;
        Ok(Analyzer {
            lexicons,
            vocabulary,
            segmenter,
        })
    }

    pub fn lexicons(&self) -> &LexiconSet {
        &self.lexicons
    }

    pub fn segmenter(&self) -> &Segmenter {
        &self.segmenter
    }

    pub fn analyze(&self, text: &str) -> Analysis {
        let tokens = self.segmenter.segment(text);
        let counts = self.lexicons.count_categories(&tokens.tokens);
        Analysis { tokens, counts }
    }
}

pub fn build_feature_space(
    corpus: &Corpus,
    analyzer: &Analyzer,
    min_ngram_count: usize,
) -> Result<FeatureSpace> {
    let sequences: Vec<TokenSequence> = corpus
        .posts()
        .iter()
        .map(|p| analyzer.segmenter().segment(&p.text))
        .collect();
    FeatureSpace::from_token_sequences(&sequences, min_ngram_count)
}

fn fixed_values(
    post: &Post,
    counts: &CategoryCounts,
    history: &[NaiveDateTime],
) -> Vec<(usize, f64)> {
    let mut out = vec![
        (FixedSlot::PositiveCount, counts.positive as f64),
        (FixedSlot::NegativeCount, counts.negative as f64),
        (
            FixedSlot::NegPosRatio,
            neg_pos_ratio(counts.negative, counts.positive),
        ),
        (FixedSlot::PsychCount, counts.psych_terms as f64),
        (FixedSlot::SelfRefCount, counts.self_refs as f64),
        (FixedSlot::OtherRefCount, counts.other_refs as f64),
        (FixedSlot::AdjectiveCount, counts.adjectives as f64),
        (FixedSlot::NounCount, counts.nouns as f64),
        (FixedSlot::VerbCount, counts.verbs as f64),
        (time_bin(&post.posted_at).slot(), 1.0),
        (
            FixedSlot::PostingFreqDeviation,
            posting_freq_deviation(&post.posted_at, history),
        ),
    ];
    if post.post_type == PostType::Original {
        out.push((FixedSlot::IsOriginal, 1.0));
    }
    out.into_iter().map(|(slot, v)| (slot.index(), v)).collect()
}

/// Feature vector for an already analyzed post. N-gram slots hold raw
/// occurrence counts; n-grams outside the space are ignored.
pub fn featurize_analyzed(
    post: &Post,
    analysis: &Analysis,
    space: &FeatureSpace,
    history: &[NaiveDateTime],
) -> FeatureVector {
    let mut pairs = fixed_values(post, &analysis.counts, history);
    for order in 1..=MAX_NGRAM_ORDER {
        let grams = extract_ngrams(&analysis.tokens.tokens, order).expect("order in range");
        pairs.extend(
            grams
                .iter()
                .filter_map(|g| space.ngram_index(order, g))
                .map(|i| (i, 1.0)),
        );
    }
    FeatureVector::from_pairs(pairs)
}

pub fn featurize(
    post: &Post,
    space: &FeatureSpace,
    analyzer: &Analyzer,
    history: &[NaiveDateTime],
) -> FeatureVector {
    featurize_analyzed(post, &analyzer.analyze(&post.text), space, history)
}
