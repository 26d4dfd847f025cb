use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::tokenize::{letter_runs, ScriptMode};
use super::{Corpus, CorpusError, Post};
use crate::dimension::Dimension;
use crate::rng;

/// One include term with the exclusions written on its own line
/// (`隣人 -助` selects posts with 隣人 unless they also contain 助).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncludeRule {
    pub term: String,
    pub exclude: Vec<String>,
}

/// Keyword filter used to pull training candidates for one dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordList {
    pub dimension: Dimension,
    pub rules: Vec<IncludeRule>,
    /// Exclusions from lines that start with `-`; they veto every rule.
    pub exclude_terms: Vec<String>,
}

impl KeywordList {
    pub fn new(
        dimension: Dimension,
        rules: Vec<IncludeRule>,
        exclude_terms: Vec<String>,
    ) -> Result<Self, CorpusError> {
        let list = KeywordList {
            dimension,
            rules,
            exclude_terms,
        };
        list.validate()?;
        Ok(list)
    }

    /// Parses the one-term-per-line keyword file format.
    pub fn parse(dimension: Dimension, text: &str) -> Result<Self, CorpusError> {
        let mut rules = Vec::new();
        let mut global = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(term) = line.strip_prefix('-') {
                let term = term.trim();
                if !term.is_empty() {
                    global.push(term.to_string());
                }
                continue;
            }
            let (mut include, mut exclude) = (Vec::new(), Vec::new());
            for word in line.split_whitespace() {
                match word.strip_prefix('-') {
                    Some(ex) if !ex.is_empty() => exclude.push(ex.to_string()),
                    _ => include.push(word),
                }
            }
            rules.push(IncludeRule {
                term: include.join(" "),
                exclude,
            });
        }
        Self::new(dimension, rules, global)
    }

    fn validate(&self) -> Result<(), CorpusError> {
        let invalid = |reason: String| CorpusError::InvalidKeywords {
            dimension: self.dimension.to_string(),
            reason,
        };
        if self.rules.is_empty() {
            return Err(invalid("no include terms".into()));
        }
        for rule in &self.rules {
            if rule.term.is_empty() {
                return Err(invalid("exclusion without an include term".into()));
            }
            let clash = self
                .rules
                .iter()
                .flat_map(|r| &r.exclude)
                .chain(&self.exclude_terms)
                .any(|ex| *ex == rule.term);
            if clash {
                return Err(invalid(format!("{:?} is both included and excluded", rule.term)));
            }
        }
        Ok(())
    }

    pub fn include_terms(&self) -> impl Iterator<Item = &str> {
        self.rules.iter().map(|r| r.term.as_str())
    }

    /// True when some rule matches and neither its own exclusions nor the
    /// list-wide exclusions occur in `text`.
    pub fn matches(&self, text: &str, mode: ScriptMode) -> bool {
        let haystack = Haystack::new(text, mode);
        if self.exclude_terms.iter().any(|t| haystack.contains(t)) {
            return false;
        }
        self.rules
            .iter()
            .any(|r| haystack.contains(&r.term) && !r.exclude.iter().any(|t| haystack.contains(t)))
    }
}

enum Haystack<'a> {
    Raw(&'a str),
    Words(Vec<String>),
}

impl<'a> Haystack<'a> {
    fn new(text: &'a str, mode: ScriptMode) -> Self {
        match mode {
            ScriptMode::Unspaced => Haystack::Raw(text),
            ScriptMode::Spaced => Haystack::Words(words(text)),
        }
    }

    fn contains(&self, term: &str) -> bool {
        match self {
            Haystack::Raw(text) => text.contains(term),
            Haystack::Words(ws) => {
                let needle = words(term);
                !needle.is_empty() && ws.windows(needle.len()).any(|w| w == needle.as_slice())
            }
        }
    }
}

fn words(text: &str) -> Vec<String> {
    letter_runs(text)
        .into_iter()
        .map(|r| r.into_iter().collect())
        .collect()
}

/// Keyword lists shipped with the crate, one per dimension.
pub fn builtin_keywords(dimension: Dimension) -> KeywordList {
    let text = match dimension {
        Dimension::Emo => include_str!("../../data/keywords/emo.txt"),
        Dimension::Sat => include_str!("../../data/keywords/sat.txt"),
        Dimension::Vit => include_str!("../../data/keywords/vit.txt"),
        Dimension::Res => include_str!("../../data/keywords/res.txt"),
        Dimension::Fun => include_str!("../../data/keywords/fun.txt"),
        Dimension::Tru => include_str!("../../data/keywords/tru.txt"),
        Dimension::Rel => include_str!("../../data/keywords/rel.txt"),
        Dimension::Wor => include_str!("../../data/keywords/wor.txt"),
    };
    KeywordList::parse(dimension, text).expect("bundled keyword lists are valid")
}

/// Samples up to `limit` matching posts uniformly from the whole corpus.
/// The result is returned in corpus (chronological) order.
pub fn select_training_candidates(
    corpus: &Corpus,
    keywords: &KeywordList,
    limit: usize,
    seed: u64,
    mode: ScriptMode,
) -> Vec<Post> {
    let matching: Vec<&Post> = corpus
        .iter()
        .filter(|p| keywords.matches(&p.text, mode))
        .collect();
    let amount = limit.min(matching.len());
    let mut rng = rng::substream(seed, "select", keywords.dimension.index() as u64);
    let mut picked = index::sample(&mut rng, matching.len(), amount).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| matching[i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn post(id: usize, text: &str) -> Post {
        Post {
            id: id.to_string(),
            created_at: Utc.with_ymd_and_hms(2016, 3, 1 + (id % 20) as u32, 9, 0, 0).unwrap(),
            text: text.to_string(),
            lang: "ja".into(),
            country: "JP".into(),
            retweet: false,
        }
    }

    #[test]
    fn builtin_examples() {
        let u = ScriptMode::Unspaced;
        assert!(builtin_keywords(Dimension::Emo).matches("今日は本当に幸せだった", u));
        assert!(builtin_keywords(Dimension::Vit).matches("朝からジムに行った", u));
        let tru = builtin_keywords(Dimension::Tru);
        assert!(tru.matches("隣人に挨拶した", u));
        // the exclusion is scoped to its own line, so 助けて still selects
        assert!(tru.matches("隣人が助けてくれた", u));
        let neighbours = KeywordList::parse(Dimension::Tru, "隣人 -助").unwrap();
        assert!(!neighbours.matches("隣人が助かった", u));
        assert!(tru.matches("誰か助けて", u));
        assert!(!builtin_keywords(Dimension::Vit).matches("ピザとpizza", u));
    }

    #[test]
    fn parse_file_format() {
        let list = KeywordList::parse(
            Dimension::Wor,
            "# job words\n\nwork\n-homework\nworking time\nboss -big\n",
        )
        .unwrap();
        assert_eq!(list.include_terms().collect::<Vec<_>>(), ["work", "working time", "boss"]);
        assert_eq!(list.exclude_terms, ["homework"]);
        assert_eq!(list.rules[2].exclude, ["big"]);
    }

    #[test]
    fn invalid_lists() {
        assert!(KeywordList::parse(Dimension::Emo, "# nothing\n-sad\n").is_err());
        assert!(KeywordList::parse(Dimension::Emo, "sad\n-sad\n").is_err());
    }

    #[test]
    fn spaced_matching_respects_word_boundaries() {
        let list = KeywordList::parse(Dimension::Wor, "work\nworking time\n").unwrap();
        let s = ScriptMode::Spaced;
        assert!(list.matches("Back to WORK, sigh", s));
        assert!(!list.matches("homework again", s));
        assert!(list.matches("my working time is long", s));
        assert!(!list.matches("working overtime", s));
    }

    #[test]
    fn selection_is_sound_and_seeded() {
        let mut corpus = Corpus::new();
        for i in 0..200 {
            let text = match i % 4 {
                0 => "幸せな一日",
                1 => "普通の日",
                2 => "悲しい",
                _ => "昼ごはん",
            };
            corpus.insert(post(i, text));
        }
        let kw = builtin_keywords(Dimension::Emo);
        let a = select_training_candidates(&corpus, &kw, 30, 11, ScriptMode::Unspaced);
        let b = select_training_candidates(&corpus, &kw, 30, 11, ScriptMode::Unspaced);
        assert_eq!(a.len(), 30);
        assert_eq!(a, b);
        assert!(a.iter().all(|p| kw.matches(&p.text, ScriptMode::Unspaced)));
        let all = select_training_candidates(&corpus, &kw, 1000, 11, ScriptMode::Unspaced);
        assert_eq!(all.len(), 100);
        let none = select_training_candidates(&corpus, &builtin_keywords(Dimension::Wor), 10, 1, ScriptMode::Unspaced);
        assert!(none.is_empty());
    }
}
