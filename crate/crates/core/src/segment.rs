//! Forward maximum-matching word segmentation.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::error::{Error, Result};
use crate::lexicon::{Lexicon, LexiconSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    /// Character count of the source text.
    pub original_length: usize,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Punctuation (`P*`) and symbol (`S*`) general categories.
pub fn is_punctuation_or_symbol(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
            | MathSymbol
            | CurrencySymbol
            | ModifierSymbol
            | OtherSymbol
    )
}

#[derive(Debug, Clone)]
pub struct Segmenter {
    vocabulary: HashSet<String>,
    max_entry_chars: usize,
    stop_words: HashSet<String>,
}

impl Segmenter {
    pub fn new<I, S>(vocabulary: I, stop_words: &Lexicon) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let vocabulary: HashSet<String> = vocabulary
            .into_iter()
            .map(Into::into)
            .filter(|w: &String| !w.is_empty())
            .collect();
        if vocabulary.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let max_entry_chars = vocabulary
            .iter()
            .map(|w| w.chars().count())
            .max()
            .unwrap_or(1);
        Ok(Segmenter {
            vocabulary,
            max_entry_chars,
            stop_words: stop_words.entries().map(str::to_string).collect(),
        })
    }

    /// Vocabulary made of every lexicon entry plus `extra` general words.
    pub fn from_lexicons<I, S>(lexicons: &LexiconSet, extra: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let vocab: Vec<String> = lexicons
            .all_entries()
            .map(str::to_string)
            .chain(extra.into_iter().map(Into::into))
            .collect();
        Segmenter::new(vocab, &lexicons.stop_words())
    }

    pub fn max_entry_chars(&self) -> usize {
        self.max_entry_chars
    }

    /// Greedy longest-match tokens before punctuation and stop-word removal.
    pub fn raw_tokens(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for chunk in text.split_whitespace() {
            self.match_chunk(chunk, &mut out);
        }
        out
    }

    fn match_chunk(&self, chunk: &str, out: &mut Vec<String>) {
        let bounds: Vec<usize> = chunk
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(chunk.len()))
            .collect();
        let n = bounds.len() - 1;
        let mut i = 0;
        while i < n {
            let longest = self.max_entry_chars.min(n - i);
            let matched = (1..=longest)
                .rev()
                .find(|&len| self.vocabulary.contains(&chunk[bounds[i]..bounds[i + len]]));
            let len = match matched {
                Some(len) => len,
                None => {
                    let first = chunk[bounds[i]..].chars().next().expect("in bounds");
                    if first.is_numeric() {
                        chunk[bounds[i]..]
                            .chars()
                            .take_while(|c| c.is_numeric())
                            .count()
                    } else {
                        1
                    }
                }
            };
            out.push(chunk[bounds[i]..bounds[i + len]].to_string());
            i += len;
        }
    }

    pub fn segment(&self, text: &str) -> TokenSequence {
        let tokens = self
            .raw_tokens(text)
            .into_iter()
            .filter(|t| !t.chars().all(is_punctuation_or_symbol))
            .filter(|t| !self.stop_words.contains(t))
            .collect();
        TokenSequence {
            tokens,
            original_length: text.chars().count(),
        }
    }
}

pub fn segment<I, S>(text: &str, vocabulary: I, stop_words: &Lexicon) -> Result<TokenSequence>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    Ok(Segmenter::new(vocabulary, stop_words)?.segment(text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::Category;
    use proptest::prelude::*;

    fn no_stops() -> Lexicon {
        Lexicon::new("stop", Category::StopWord, Vec::<String>::new())
    }

    #[test]
    fn longest_match_wins() {
        let seq = segment("abcd", ["ab", "abc", "d"], &no_stops()).unwrap();
        assert_eq!(seq.tokens, vec!["abc", "d"]);
    }

    #[test]
    fn empty_text() {
        let seq = segment("", ["我"], &no_stops()).unwrap();
        assert!(seq.is_empty());
        assert_eq!(seq.original_length, 0);
    }

    #[test]
    fn punctuation_and_stop_words_removed() {
        let stops = Lexicon::new("stop", Category::StopWord, ["很"]);
        let seq = segment("我很难过。", ["我", "难过"], &stops).unwrap();
        assert_eq!(seq.tokens, vec!["我", "难过"]);
        assert_eq!(seq.original_length, 5);
    }

    #[test]
    fn empty_vocabulary_rejected() {
        assert!(matches!(
            Segmenter::new(Vec::<String>::new(), &no_stops()),
            Err(Error::EmptyVocabulary)
        ));
    }

    #[test]
    fn whitespace_splits_and_digits_group() {
        let seg = Segmenter::new(["hi", "吃药"], &no_stops()).unwrap();
        let seq = seg.segment("hi there 吃药30片!! ☹");
        assert_eq!(
            seq.tokens,
            vec!["hi", "t", "h", "e", "r", "e", "吃药", "30", "片"]
        );
    }

    #[test]
    fn vocabulary_beats_digit_run() {
        let seg = Segmenter::new(["1314"], &no_stops()).unwrap();
        assert_eq!(seg.segment("131499").tokens, vec!["1314", "99"]);
    }

    #[test]
    fn symbol_only_vocabulary_entries_are_dropped() {
        let seg = Segmenter::new([":)", "好"], &no_stops()).unwrap();
        assert_eq!(seg.segment("好:)").tokens, vec!["好"]);
    }

    const ALPHABET: [char; 4] = ['我', '很', '难', '。'];

    proptest! {
        #[test]
        fn deterministic_and_bounded(
            text in prop::collection::vec(prop::sample::select(&ALPHABET[..]), 0..24),
            vocab in prop::collection::vec("[我很难]{1,3}", 1..6),
        ) {
            let text: String = text.into_iter().collect();
            let seg = Segmenter::new(vocab.clone(), &Lexicon::new("s", Category::StopWord, ["很"])).unwrap();
            let a = seg.segment(&text);
            prop_assert_eq!(&a, &seg.segment(&text));
            prop_assert!(a.len() <= text.chars().count());
            for t in &a.tokens {
                prop_assert!(vocab.contains(t) || t.chars().count() == 1);
                prop_assert!(t != "很" && t != "。");
            }
            // raw tokens reassemble the text exactly
            prop_assert_eq!(seg.raw_tokens(&text).concat(), text);
        }
    }
}
