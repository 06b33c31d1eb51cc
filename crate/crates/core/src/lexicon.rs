//! Category-tagged word lists and per-post category counting.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Longest run of adjacent tokens joined when matching phrase entries.
pub const PHRASE_WINDOW: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PosTag {
    Adjective,
    Noun,
    Verb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    PositiveEmotion,
    NegativeEmotion,
    PsychologicalTerm,
    SelfReference,
    OtherReference,
    StopWord,
    Pos(PosTag),
}

impl Category {
    pub const ALL: [Category; 9] = [
        Category::PositiveEmotion,
        Category::NegativeEmotion,
        Category::PsychologicalTerm,
        Category::SelfReference,
        Category::OtherReference,
        Category::StopWord,
        Category::Pos(PosTag::Adjective),
        Category::Pos(PosTag::Noun),
        Category::Pos(PosTag::Verb),
    ];

    /// Short name used on the command line and in fixture file names.
    pub fn short_name(self) -> &'static str {
        match self {
            Category::PositiveEmotion => "positive",
            Category::NegativeEmotion => "negative",
            Category::PsychologicalTerm => "psych",
            Category::SelfReference => "self",
            Category::OtherReference => "other",
            Category::StopWord => "stop",
            Category::Pos(PosTag::Adjective) => "adjective",
            Category::Pos(PosTag::Noun) => "noun",
            Category::Pos(PosTag::Verb) => "verb",
        }
    }

    // Bit in the per-entry category mask; stop words are not counted.
    fn count_bit(self) -> Option<u8> {
        match self {
            Category::PositiveEmotion => Some(1 << 0),
            Category::NegativeEmotion => Some(1 << 1),
            Category::PsychologicalTerm => Some(1 << 2),
            Category::SelfReference => Some(1 << 3),
            Category::OtherReference => Some(1 << 4),
            Category::Pos(PosTag::Adjective) => Some(1 << 5),
            Category::Pos(PosTag::Noun) => Some(1 << 6),
            Category::Pos(PosTag::Verb) => Some(1 << 7),
            Category::StopWord => None,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let c = match s.trim().to_ascii_lowercase().as_str() {
            "positive" | "positive_emotion" | "pos_emotion" => Category::PositiveEmotion,
            "negative" | "negative_emotion" | "neg_emotion" => Category::NegativeEmotion,
            "psych" | "psychological" | "psychological_term" => Category::PsychologicalTerm,
            "self" | "self_reference" => Category::SelfReference,
            "other" | "other_reference" => Category::OtherReference,
            "stop" | "stopword" | "stop_word" | "stopwords" => Category::StopWord,
            "adjective" | "adj" => Category::Pos(PosTag::Adjective),
            "noun" => Category::Pos(PosTag::Noun),
            "verb" => Category::Pos(PosTag::Verb),
            _ => return Err(Error::UnknownCategory(s.to_string())),
        };
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    pub name: String,
    pub category: Category,
    entries: BTreeSet<String>,
}

#[derive(Debug, Clone)]
pub struct LoadedLexicon {
    pub lexicon: Lexicon,
    pub duplicates: usize,
}

impl Lexicon {
    /// Builds a lexicon from raw entries, trimming and dropping empties.
    pub fn new<I, S>(name: impl Into<String>, category: Category, entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let entries = entries
            .into_iter()
            .map(|e| e.as_ref().trim().to_string())
            .filter(|e| !e.is_empty())
            .collect();
        Lexicon {
            name: name.into(),
            category,
            entries,
        }
    }

    /// Parses the lexicon file format: one entry per line, `#` comments,
    /// blank lines ignored.
    pub fn parse(name: impl Into<String>, category: Category, text: &str) -> Result<LoadedLexicon> {
        let name = name.into();
        let mut entries = BTreeSet::new();
        let mut duplicates = 0;
        for line in text.lines() {
            let entry = line.trim();
            if entry.is_empty() || entry.starts_with('#') {
                continue;
            }
            if !entries.insert(entry.to_string()) {
                duplicates += 1;
            }
        }
        if entries.is_empty() {
            return Err(Error::EmptyLexicon(name));
        }
        Ok(LoadedLexicon {
            lexicon: Lexicon {
                name,
                category,
                entries,
            },
            duplicates,
        })
    }

    pub fn entries(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn load_lexicon(path: impl AsRef<Path>, category: Category) -> Result<LoadedLexicon> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::InvalidUtf8 {
        path: path.to_path_buf(),
        offset: e.valid_up_to(),
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| category.short_name().to_string());
    Lexicon::parse(name, category, text)
}

/// Per-post occurrence counts for every counted category.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub positive: usize,
    pub negative: usize,
    pub psych_terms: usize,
    pub self_refs: usize,
    pub other_refs: usize,
    pub adjectives: usize,
    pub nouns: usize,
    pub verbs: usize,
}

impl CategoryCounts {
    fn add_mask(&mut self, mask: u8) {
        let slots = [
            &mut self.positive,
            &mut self.negative,
            &mut self.psych_terms,
            &mut self.self_refs,
            &mut self.other_refs,
            &mut self.adjectives,
            &mut self.nouns,
            &mut self.verbs,
        ];
        for (bit, slot) in slots.into_iter().enumerate() {
            if mask & (1 << bit) != 0 {
                *slot += 1;
            }
        }
    }

    pub fn get(&self, category: Category) -> usize {
        match category {
            Category::PositiveEmotion => self.positive,
            Category::NegativeEmotion => self.negative,
            Category::PsychologicalTerm => self.psych_terms,
            Category::SelfReference => self.self_refs,
            Category::OtherReference => self.other_refs,
            Category::Pos(PosTag::Adjective) => self.adjectives,
            Category::Pos(PosTag::Noun) => self.nouns,
            Category::Pos(PosTag::Verb) => self.verbs,
            Category::StopWord => 0,
        }
    }
}

/// The lexicons used by one pipeline, with a combined entry index.
#[derive(Debug, Clone, Default)]
pub struct LexiconSet {
    lexicons: Vec<Lexicon>,
    masks: HashMap<String, u8>,
}

impl LexiconSet {
    pub fn new(lexicons: Vec<Lexicon>) -> Self {
        let mut masks: HashMap<String, u8> = HashMap::new();
        for lex in &lexicons {
            if let Some(bit) = lex.category.count_bit() {
                for entry in lex.entries() {
                    *masks.entry(entry.to_string()).or_default() |= bit;
                }
            }
        }
        LexiconSet { lexicons, masks }
    }

    pub fn lexicons(&self) -> &[Lexicon] {
        &self.lexicons
    }

    pub fn of_category(&self, category: Category) -> impl Iterator<Item = &Lexicon> {
        self.lexicons.iter().filter(move |l| l.category == category)
    }

    /// All stop words across stop-word lexicons.
    pub fn stop_words(&self) -> Lexicon {
        Lexicon::new(
            "stop",
            Category::StopWord,
            self.of_category(Category::StopWord)
                .flat_map(Lexicon::entries),
        )
    }

    /// Every entry of every lexicon, for the segmentation vocabulary.
    pub fn all_entries(&self) -> impl Iterator<Item = &str> {
        self.lexicons.iter().flat_map(Lexicon::entries)
    }

    /// Counts category occurrences in a token sequence.
    ///
    /// Every start position contributes at most one to each category: it
    /// counts when the token there, or the join of up to [`PHRASE_WINDOW`]
    /// tokens starting there, is an entry of that category.
    pub fn count_categories<S: AsRef<str>>(&self, tokens: &[S]) -> CategoryCounts {
        let mut counts = CategoryCounts::default();
        let mut joined = String::new();
        for start in 0..tokens.len() {
            joined.clear();
            let mut mask = 0u8;
            for token in tokens[start..].iter().take(PHRASE_WINDOW) {
                joined.push_str(token.as_ref());
                if let Some(m) = self.masks.get(joined.as_str()) {
                    mask |= m;
                }
            }
            counts.add_mask(mask);
        }
        counts
    }
}

pub fn count_categories<S: AsRef<str>>(tokens: &[S], lexicons: &LexiconSet) -> CategoryCounts {
    lexicons.count_categories(tokens)
}
