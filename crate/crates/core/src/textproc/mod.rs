//! Text normalization, tokenization, vocabulary indexing and stop-word removal.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod lovins;

pub use lovins::lovins_stem;

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const DEFAULT_MIN_FREQUENCY: usize = 3;

static URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:https?://|www\.)\S+").expect("url regex"));
static MENTION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"@[A-Za-z0-9_]+").expect("mention regex"));

/// Lowercase, replace URLs by `url` and mentions by `user`, drop `#` from hashtags,
/// map every character outside `[a-z0-9' ]` to a space and collapse whitespace.
pub fn clean(text: &str) -> String {
    let text = URL.replace_all(text, " url ");
    let text = MENTION.replace_all(&text, " user ");
    let lowered = text.to_lowercase();
    let mut out = String::with_capacity(lowered.len());
    let mut pending_space = false;
    for c in lowered.chars() {
        let keep = c.is_ascii_lowercase() || c.is_ascii_digit() || c == '\'';
        if keep {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        } else {
            pending_space = true;
        }
    }
    out
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}

/// `clean` followed by `tokenize`.
pub fn analyze(text: &str) -> Vec<String> {
    tokenize(&clean(text))
}

/// Token to index map with the reserved `PAD` (0) and `UNK` (1) slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    min_frequency: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    min_frequency: usize,
    tokens: Vec<String>,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        Vocabulary::from_tokens(r.tokens, r.min_frequency)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            min_frequency: v.min_frequency,
            tokens: v.tokens,
        }
    }
}

impl Vocabulary {
    /// Build from an ordered token list; token `i` gets index `i + 2`.
    pub fn from_tokens(tokens: Vec<String>, min_frequency: usize) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i + 2))
            .collect();
        Vocabulary {
            tokens,
            index,
            min_frequency,
        }
    }

    /// Size including the two special slots.
    pub fn len(&self) -> usize {
        self.tokens.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_frequency(&self) -> usize {
        self.min_frequency
    }

    /// Non-special tokens in index order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token_at(&self, index: usize) -> Option<&str> {
        match index {
            PAD => Some("<pad>"),
            UNK => Some("<unk>"),
            i => self.tokens.get(i - 2).map(String::as_str),
        }
    }

    /// Index sequence of exactly `max_len` entries: unknown tokens map to `UNK`,
    /// short inputs are right-padded with `PAD`, long inputs truncated.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S], max_len: usize) -> Vec<usize> {
        let mut out: Vec<usize> = tokens
            .iter()
            .take(max_len)
            .map(|t| self.index_of(t.as_ref()).unwrap_or(UNK))
            .collect();
        out.resize(max_len, PAD);
        out
    }

    /// Inverse of `encode` with `PAD` stripped; `UNK` decodes to `<unk>`.
    pub fn decode(&self, indices: &[usize]) -> Vec<String> {
        indices
            .iter()
            .filter(|&&i| i != PAD)
            .map(|&i| self.token_at(i).unwrap_or("<unk>").to_owned())
            .collect()
    }

    /// Plain-text form: one token per line, index = line number + 2.
    pub fn to_lines(&self) -> String {
        let mut s = String::new();
        for t in &self.tokens {
            s.push_str(t);
            s.push('\n');
        }
        s
    }

    pub fn from_lines(text: &str, min_frequency: usize) -> Self {
        Self::from_tokens(
            text.lines().filter(|l| !l.is_empty()).map(str::to_owned).collect(),
            min_frequency,
        )
    }
}

/// Keep tokens seen at least `min_frequency` times, most frequent first,
/// ties broken lexicographically.
pub fn fit_vocabulary<S: AsRef<str>>(documents: &[Vec<S>], min_frequency: usize) -> Result<Vocabulary> {
    if min_frequency == 0 {
        return Err(Error::Config("min_frequency must be at least 1".into()));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for doc in documents {
        for t in doc {
            *counts.entry(t.as_ref()).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_frequency)
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Ok(Vocabulary::from_tokens(
        kept.into_iter().map(|(t, _)| t.to_owned()).collect(),
        min_frequency,
    ))
}

pub type StopWords = HashSet<String>;

/// One word per line; blank lines ignored, entries lowercased.
pub fn load_stopwords(path: impl AsRef<Path>) -> Result<StopWords> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_stopwords(&text))
}

pub fn parse_stopwords(text: &str) -> StopWords {
    text.lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect()
}

pub fn remove_stopwords(tokens: &[String], stopwords: &StopWords) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !stopwords.contains(t.as_str()))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn docs(texts: &[&str]) -> Vec<Vec<String>> {
        texts.iter().map(|t| tokenize(t)).collect()
    }

    #[test]
    fn clean_examples() {
        assert_eq!(clean("Check https://t.co/xyz NOW!"), "check url now");
        assert_eq!(clean(""), "");
        assert_eq!(clean("#MeToo @alice lied"), "metoo user lied");
        assert_eq!(clean("  don't   STOP\t"), "don't stop");
        assert_eq!(clean("café\u{2014}ok"), "caf ok");
        assert_eq!(clean("see www.example.com/a?b"), "see url");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("women lie"), vec!["women", "lie"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("a  b"), vec!["a", "b"]);
    }

    #[test]
    fn vocabulary_frequency_cutoff_and_order() {
        let v = fit_vocabulary(&docs(&["a a a b b c"]), 2).unwrap();
        assert_eq!(v.tokens(), ["a", "b"]);
        assert_eq!(v.index_of("a"), Some(2));
        assert_eq!(v.index_of("b"), Some(3));
        assert_eq!(v.index_of("c"), None);

        let v = fit_vocabulary(&docs(&["a a a b b c"]), 1).unwrap();
        assert_eq!(v.tokens(), ["a", "b", "c"]);
        assert_eq!(v.len(), 5);
    }

    #[test]
    fn vocabulary_tie_break_is_lexicographic() {
        let v = fit_vocabulary(&docs(&["b a b a a b"]), 1).unwrap();
        assert_eq!(v.index_of("a"), Some(2));
        assert_eq!(v.index_of("b"), Some(3));
    }

    #[test]
    fn empty_corpus_has_only_specials() {
        let v = fit_vocabulary::<String>(&[], 3).unwrap();
        assert_eq!(v.len(), 2);
        assert!(fit_vocabulary(&docs(&["a"]), 0).is_err());
    }

    #[test]
    fn encode_pads_truncates_and_maps_unknowns() {
        let v = Vocabulary::from_tokens(vec!["a".into(), "b".into(), "c".into()], 1);
        assert_eq!(v.encode(&["a"], 3), vec![2, 0, 0]);
        assert_eq!(v.encode(&["zzz"], 2), vec![1, 0]);
        assert_eq!(v.encode(&["a", "b", "c", "a", "b"], 3), vec![2, 3, 4]);
    }

    #[test]
    fn vocabulary_text_round_trip() {
        let v = fit_vocabulary(&docs(&["x y y z z z"]), 1).unwrap();
        assert_eq!(Vocabulary::from_lines(&v.to_lines(), 1), v);
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(serde_json::from_str::<Vocabulary>(&json).unwrap(), v);
    }

    #[test]
    fn stopword_removal() {
        let sw = parse_stopwords("the\n\nA\n");
        let toks: Vec<String> = ["the", "rape", "case", "a"].iter().map(|s| s.to_string()).collect();
        assert_eq!(remove_stopwords(&toks, &sw), vec!["rape", "case"]);
        assert!(remove_stopwords(&[], &sw).is_empty());
        assert_eq!(remove_stopwords(&toks, &StopWords::new()), toks);
    }

    proptest! {
        #[test]
        fn encode_length_is_max_len(toks in prop::collection::vec("[a-e]{1,3}", 0..20), max_len in 1usize..12) {
            let v = fit_vocabulary(&[toks.clone()], 1).unwrap();
            prop_assert_eq!(v.encode(&toks, max_len).len(), max_len);
        }

        #[test]
        fn decode_inverts_encode(toks in prop::collection::vec("[a-e]{1,3}", 0..10)) {
            let v = fit_vocabulary(&[toks.clone()], 1).unwrap();
            let max_len = toks.len().max(1);
            prop_assert_eq!(v.decode(&v.encode(&toks, max_len)), toks);
        }

        #[test]
        fn min_frequency_one_keeps_every_distinct_token(toks in prop::collection::vec("[a-h]{1,2}", 0..30)) {
            let distinct: HashSet<&String> = toks.iter().collect();
            let v = fit_vocabulary(&[toks.clone()], 1).unwrap();
            prop_assert_eq!(v.len(), distinct.len() + 2);
        }
    }
}
