//! Synthetic labeled corpora with a tunable amount of class signal.
//!
//! At `signal = 0` both classes are drawn from the same distribution. At
//! `signal = 1` every suicidal post contains a psychological term and
//! the behavioral rates (self references, negative words, original posts,
//! late-night posting) match those reported for suicidal users.

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label, Post, PostType};
use crate::error::{Error, Result};
use crate::lexicon::{Category, PosTag};
use crate::resources::{builtin_lexicon, builtin_vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub minority: usize,
    pub majority: usize,
    pub signal: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(minority: usize, majority: usize, signal: f64, seed: u64) -> Self {
        SynthConfig {
            minority,
            majority,
            signal,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Rates {
    marker: f64,
    self_ref: f64,
    other_ref: f64,
    negative: f64,
    positive: f64,
    original: f64,
    /// night, morning, afternoon, evening
    bins: [f64; 4],
}

const MAJORITY: Rates = Rates {
    marker: 0.02,
    self_ref: 0.35,
    other_ref: 0.05,
    negative: 0.15,
    positive: 0.5,
    original: 0.33,
    bins: [0.13, 0.28, 0.27, 0.32],
};

const MINORITY: Rates = Rates {
    marker: 1.0,
    self_ref: 0.68,
    other_ref: 0.28,
    negative: 0.6,
    positive: 0.15,
    original: 0.87,
    bins: [0.40, 0.13, 0.17, 0.30],
};

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

impl Rates {
    fn blend(t: f64) -> Rates {
        let mut bins = [0.0; 4];
        for (k, b) in bins.iter_mut().enumerate() {
            *b = lerp(MAJORITY.bins[k], MINORITY.bins[k], t);
        }
        Rates {
            marker: lerp(MAJORITY.marker, MINORITY.marker, t),
            self_ref: lerp(MAJORITY.self_ref, MINORITY.self_ref, t),
            other_ref: lerp(MAJORITY.other_ref, MINORITY.other_ref, t),
            negative: lerp(MAJORITY.negative, MINORITY.negative, t),
            positive: lerp(MAJORITY.positive, MINORITY.positive, t),
            original: lerp(MAJORITY.original, MINORITY.original, t),
            bins,
        }
    }
}

// hour ranges of the four bins; night wraps past midnight
const BIN_HOURS: [&[u32]; 4] = [
    &[23, 0, 1, 2, 3, 4, 5, 6],
    &[7, 8, 9, 10, 11, 12, 13],
    &[14, 15, 16, 17],
    &[18, 19, 20, 21, 22],
];

const POSTS_PER_AUTHOR: usize = 5;

struct Words {
    markers: Vec<String>,
    self_refs: Vec<String>,
    others: Vec<String>,
    negative: Vec<String>,
    positive: Vec<String>,
    filler: Vec<String>,
}

impl Words {
    fn load() -> Words {
        let list = |c: Category| {
            builtin_lexicon(c)
                .entries()
                .map(str::to_string)
                .collect::<Vec<_>>()
        };
        let markers = list(Category::PsychologicalTerm);
        let negative = list(Category::NegativeEmotion);
        let positive = list(Category::PositiveEmotion);
        let emotional: Vec<&String> = markers.iter().chain(&negative).chain(&positive).collect();
        let mut filler = builtin_vocabulary();
        filler.extend(list(Category::Pos(PosTag::Noun)));
        filler.retain(|w| !emotional.contains(&w));
        Words {
            markers,
            self_refs: list(Category::SelfReference),
            others: list(Category::OtherReference),
            negative,
            positive,
            filler,
        }
    }
}

fn pick(rng: &mut ChaCha8Rng, words: &[String]) -> String {
    words
        .choose(rng)
        .cloned()
        .expect("word lists are non-empty")
}

fn draw_bin(rng: &mut ChaCha8Rng, bins: &[f64; 4]) -> usize {
    let total: f64 = bins.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, &p) in bins.iter().enumerate() {
        if u < p {
            return k;
        }
        u -= p;
    }
    3
}

fn compose(rng: &mut ChaCha8Rng, words: &Words, rates: &Rates) -> String {
    let mut parts: Vec<String> = (0..rng.random_range(2..=5))
        .map(|_| pick(rng, &words.filler))
        .collect();
    let mut maybe = |rng: &mut ChaCha8Rng, p: f64, list: &[String]| {
        if rng.random_bool(p.clamp(0.0, 1.0)) {
            parts.push(pick(rng, list));
        }
    };
    maybe(rng, rates.self_ref, &words.self_refs);
    maybe(rng, rates.other_ref, &words.others);
    maybe(rng, rates.negative, &words.negative);
    maybe(rng, rates.positive, &words.positive);
    maybe(rng, rates.marker, &words.markers);
    parts.shuffle(rng);
    // full-width commas keep maximum matching from joining neighbors
    parts.join("，") + "。"
}

fn timestamp(rng: &mut ChaCha8Rng, bin: usize) -> NaiveDateTime {
    let day = NaiveDate::from_ymd_opt(2013, 1, 1).expect("valid date")
        + Duration::days(rng.random_range(0..365));
    let hour = *BIN_HOURS[bin].choose(rng).expect("bins are non-empty");
    day.and_hms_opt(hour, rng.random_range(0..60), 0)
        .expect("valid time")
}

/// Generates `minority` suicidal and `majority` non-suicidal posts. The
/// output is a deterministic function of the config.
pub fn synth_corpus(config: &SynthConfig) -> Result<Corpus> {
    if !(0.0..=1.0).contains(&config.signal) {
        return Err(Error::InvalidHyperparameter(format!(
            "signal must be in [0, 1], got {}",
            config.signal
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let words = Words::load();
    let mut drafts = Vec::with_capacity(config.minority + config.majority);
    for (label, count, rates) in [
        (
            Label::Suicidal,
            config.minority,
            Rates::blend(config.signal),
        ),
        (Label::NonSuicidal, config.majority, MAJORITY),
    ] {
        for i in 0..count {
            let author_id = format!("{}-{}", label.as_str(), i / POSTS_PER_AUTHOR);
            let bin = draw_bin(&mut rng, &rates.bins);
            let post_type = if rng.random_bool(rates.original) {
                PostType::Original
            } else {
                PostType::Forward
            };
            drafts.push(Post {
                id: String::new(),
                author_id,
                text: compose(&mut rng, &words, &rates),
                posted_at: timestamp(&mut rng, bin),
                post_type,
                label: Some(label),
            });
        }
    }
    drafts.shuffle(&mut rng);
    for (i, p) in drafts.iter_mut().enumerate() {
        p.id = format!("s{i:05}");
    }
    Corpus::new(drafts)
}
