use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

static URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:https?://|www\.)\S+").expect("url pattern"));
static MENTION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[@＠][\p{L}\p{N}_]+").expect("mention pattern"));

/// How words are delimited in the corpus language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScriptMode {
    /// Whitespace-delimited scripts (Latin, Cyrillic, ...).
    Spaced,
    /// Scripts written without word separators (Japanese, Chinese).
    #[default]
    Unspaced,
}

impl FromStr for ScriptMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "spaced" => Ok(ScriptMode::Spaced),
            "unspaced" => Ok(ScriptMode::Unspaced),
            other => Err(format!("unknown script mode {other:?}")),
        }
    }
}

pub(crate) fn strip_platform_noise(text: &str) -> String {
    let no_urls = URL.replace_all(text, " ");
    MENTION.replace_all(&no_urls, " ").into_owned()
}

/// Maximal runs of letters, ideographs and digits, lowercased.
pub(crate) fn letter_runs(text: &str) -> Vec<Vec<char>> {
    let mut runs = Vec::new();
    let mut current = Vec::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            runs.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        runs.push(current);
    }
    runs
}

/// Splits a post into feature tokens. URLs and @-mentions are removed first.
///
/// Spaced scripts yield lowercase words. Unspaced scripts yield overlapping
/// character bigrams followed by trigrams, computed within each run of
/// letters so no window straddles punctuation.
pub fn tokenize(text: &str, mode: ScriptMode) -> Vec<String> {
    let cleaned = strip_platform_noise(text);
    let runs = letter_runs(&cleaned);
    match mode {
        ScriptMode::Spaced => runs.into_iter().map(|r| r.into_iter().collect()).collect(),
        ScriptMode::Unspaced => {
            let mut tokens = Vec::new();
            for n in [2, 3] {
                for run in &runs {
                    tokens.extend(run.windows(n).map(|w| w.iter().collect::<String>()));
                }
            }
            tokens
        }
    }
}

/// Token to feature-index map, ranked by training frequency.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(tokens: Vec<String>) -> Self {
        Vocabulary::from_tokens(tokens)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

impl Vocabulary {
    /// Keeps the `max_features` most frequent tokens; ties break
    /// lexicographically. Index 0 is the most frequent token.
    pub fn build<'a, I, T>(documents: I, max_features: usize) -> Self
    where
        I: IntoIterator<Item = T>,
        T: IntoIterator<Item = &'a String>,
    {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for doc in documents {
            for tok in doc {
                *counts.entry(tok.as_str()).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(max_features);
        Self::from_tokens(ranked.into_iter().map(|(t, _)| t.to_string()).collect())
    }

    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary { tokens, index }
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// The set of vocabulary indices present in one post.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Signature(Vec<u32>);

impl Signature {
    pub const EMPTY: Signature = Signature(Vec::new());

    pub fn from_indices<I: IntoIterator<Item = u32>>(indices: I) -> Self {
        let mut v: Vec<u32> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Signature(v)
    }

    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("EMPTY");
        }
        for (i, idx) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{idx}")?;
        }
        Ok(())
    }
}

impl FromStr for Signature {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "EMPTY" || s.is_empty() {
            return Ok(Signature::EMPTY);
        }
        let parsed = s
            .split(',')
            .map(|p| p.trim().parse::<u32>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Signature::from_indices(parsed))
    }
}

impl Serialize for Signature {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Signature {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Projects a token list onto the vocabulary. Indices at or beyond
/// `max_features` and out-of-vocabulary tokens are ignored.
pub fn signature_of(tokens: &[String], vocabulary: &Vocabulary, max_features: usize) -> Signature {
    Signature::from_indices(
        tokens
            .iter()
            .filter_map(|t| vocabulary.get(t))
            .filter(|&i| (i as usize) < max_features),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn spaced_words() {
        assert_eq!(
            tokenize("what a beautiful day :)", ScriptMode::Spaced),
            toks(&["what", "a", "beautiful", "day"])
        );
        assert_eq!(
            tokenize("@friend Check THIS https://t.co/abc!", ScriptMode::Spaced),
            toks(&["check", "this"])
        );
    }

    #[test]
    fn unspaced_bigrams_then_trigrams() {
        assert_eq!(
            tokenize("ラッキーだ", ScriptMode::Unspaced),
            toks(&["ラッ", "ッキ", "キー", "ーだ", "ラッキ", "ッキー", "キーだ"])
        );
        // punctuation splits windows
        assert_eq!(
            tokenize("体中、痛い", ScriptMode::Unspaced),
            toks(&["体中", "痛い"])
        );
    }

    #[test]
    fn url_only_text_is_empty() {
        assert!(tokenize("http://x.y :)", ScriptMode::Spaced).is_empty());
        assert!(tokenize("http://x.y :)", ScriptMode::Unspaced).is_empty());
    }

    #[test]
    fn signature_examples() {
        let vocab = Vocabulary::from_tokens(toks(&["a", "b", "c", "d", "e", "f", "g", "h"]));
        let sig = signature_of(&toks(&["h", "d", "zzz"]), &vocab, 100);
        assert_eq!(sig.to_string(), "3,7");
        let empty = signature_of(&toks(&["zzz"]), &vocab, 100);
        assert_eq!(empty, Signature::EMPTY);
        assert_eq!(empty.to_string(), "EMPTY");
        assert_eq!(
            signature_of(&toks(&["d", "d", "h"]), &vocab, 100),
            signature_of(&toks(&["h", "d"]), &vocab, 100)
        );
        // max_features truncates by rank
        assert_eq!(signature_of(&toks(&["h", "d"]), &vocab, 4).to_string(), "3");
    }

    #[test]
    fn vocabulary_ranks_by_frequency() {
        let docs = [toks(&["b", "a", "b"]), toks(&["c", "b", "a"])];
        let vocab = Vocabulary::build(docs.iter(), 2);
        assert_eq!(vocab.tokens(), &toks(&["b", "a"]));
        assert_eq!(vocab.get("c"), None);
    }

    proptest! {
        #[test]
        fn signature_ignores_order_and_multiplicity(
            mut tokens in proptest::collection::vec("[a-e]", 0..20),
            seed in any::<u64>(),
        ) {
            let vocab = Vocabulary::from_tokens(toks(&["a", "b", "c"]));
            let before = signature_of(&tokens, &vocab, 10);
            let n = tokens.len();
            if n > 0 {
                let extra = tokens[(seed as usize) % n].clone();
                tokens.push(extra);
                tokens.rotate_left((seed as usize) % n);
            }
            prop_assert_eq!(signature_of(&tokens, &vocab, 10), before.clone());
            prop_assert_eq!(before.to_string().parse::<Signature>().unwrap(), before);
        }
    }
}
