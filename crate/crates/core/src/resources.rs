//! Small built-in lexicons and vocabulary, used when none are configured
//! and by the synthetic corpus generator.

use crate::error::Result;
use crate::features::Analyzer;
use crate::lexicon::{Category, Lexicon, PosTag};

macro_rules! fixture {
    ($name:literal) => {
        include_str!(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/fixtures/lexicons/",
            $name
        ))
    };
}

const LEXICON_FILES: [(Category, &str); 9] = [
    (Category::PositiveEmotion, fixture!("positive.txt")),
    (Category::NegativeEmotion, fixture!("negative.txt")),
    (Category::PsychologicalTerm, fixture!("psych.txt")),
    (Category::SelfReference, fixture!("self.txt")),
    (Category::OtherReference, fixture!("other.txt")),
    (Category::StopWord, fixture!("stop.txt")),
    (Category::Pos(PosTag::Adjective), fixture!("adjective.txt")),
    (Category::Pos(PosTag::Noun), fixture!("noun.txt")),
    (Category::Pos(PosTag::Verb), fixture!("verb.txt")),
];

const VOCAB_FILE: &str = fixture!("vocab.txt");

pub fn builtin_lexicon(category: Category) -> Lexicon {
    let (_, text) = LEXICON_FILES
        .iter()
        .find(|(c, _)| *c == category)
        .expect("every category has a fixture");
    Lexicon::parse(format!("builtin-{category}"), category, text)
        .expect("fixture lexicons are non-empty")
        .lexicon
}

pub fn builtin_lexicons() -> Vec<Lexicon> {
    LEXICON_FILES
        .iter()
        .map(|(c, _)| builtin_lexicon(*c))
        .collect()
}

pub fn builtin_vocabulary() -> Vec<String> {
    parse_vocabulary(VOCAB_FILE)
}

/// Vocabulary file format: the lexicon format without a category.
pub fn parse_vocabulary(text: &str) -> Vec<String> {
    let mut words: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect();
    words.sort();
    words.dedup();
    words
}

pub fn builtin_analyzer() -> Result<Analyzer> {
    Analyzer::new(builtin_lexicons(), builtin_vocabulary())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_load() {
        let lexicons = builtin_lexicons();
        assert_eq!(lexicons.len(), Category::ALL.len());
        assert!(lexicons.iter().all(|l| !l.is_empty()));
        assert!(builtin_vocabulary().contains(&"今天".to_string()));
        let a = builtin_analyzer().unwrap();
        let analysis = a.analyze("我今天很难过，吃了安眠药。");
        assert_eq!(
            analysis.tokens.tokens,
            vec!["我", "今天", "难过", "吃", "安眠药"]
        );
        assert_eq!(analysis.counts.self_refs, 1);
        assert_eq!(analysis.counts.negative, 1);
        assert_eq!(analysis.counts.psych_terms, 1);
        assert_eq!(analysis.counts.verbs, 1);
    }
}
