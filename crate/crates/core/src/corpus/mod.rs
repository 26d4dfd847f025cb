//! Post ingestion, day partitioning, tokenization and training-candidate
//! selection.

mod keywords;
mod store;
mod tokenize;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Read};
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

pub use keywords::{builtin_keywords, select_training_candidates, KeywordList};
pub use store::{read_jsonl, write_jsonl, CorpusLayout, StoreError};
pub use tokenize::{signature_of, tokenize, ScriptMode, Signature, Vocabulary};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("unreadable source: {0}")]
    Unreadable(#[from] std::io::Error),
    #[error("unreadable csv source: {0}")]
    UnreadableCsv(String),
    #[error("invalid filter code {0:?}")]
    InvalidFilter(String),
    #[error("invalid keyword list for {dimension}: {reason}")]
    InvalidKeywords { dimension: String, reason: String },
    #[error("unknown format {0:?} (expected jsonl or csv)")]
    UnknownFormat(String),
}

/// One archived social-media message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub text: String,
    pub lang: String,
    pub country: String,
    #[serde(default)]
    pub retweet: bool,
}

impl Post {
    /// UTC calendar day the post belongs to.
    pub fn day(&self) -> NaiveDate {
        self.created_at.date_naive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Jsonl,
    Csv,
}

impl FromStr for InputFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(InputFormat::Jsonl),
            "csv" => Ok(InputFormat::Csv),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Malformed,
    BadTimestamp,
    EmptyText,
    FilterMismatch,
    DuplicateId,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RejectReason::Malformed => "malformed",
            RejectReason::BadTimestamp => "bad_timestamp",
            RejectReason::EmptyText => "empty_text",
            RejectReason::FilterMismatch => "filter_mismatch",
            RejectReason::DuplicateId => "duplicate_id",
        };
        f.write_str(s)
    }
}

/// Language and country a post must carry to be accepted. `None` accepts any.
#[derive(Debug, Clone, Default)]
pub struct IngestFilter {
    lang: Option<String>,
    country: Option<String>,
}

impl IngestFilter {
    pub fn new(lang: Option<&str>, country: Option<&str>) -> Result<Self, CorpusError> {
        let check = |code: &str, lens: std::ops::RangeInclusive<usize>| {
            let ok = lens.contains(&code.len()) && code.chars().all(|c| c.is_ascii_alphabetic());
            if ok {
                Ok(code.to_ascii_lowercase())
            } else {
                Err(CorpusError::InvalidFilter(code.to_string()))
            }
        };
        Ok(IngestFilter {
            lang: lang.map(|l| check(l, 2..=3)).transpose()?,
            country: country.map(|c| check(c, 2..=2)).transpose()?,
        })
    }

    fn accepts(&self, lang: &str, country: &str) -> bool {
        let eq = |want: &Option<String>, got: &str| {
            want.as_deref()
                .is_none_or(|w| w.eq_ignore_ascii_case(got.trim()))
        };
        eq(&self.lang, lang) && eq(&self.country, country)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub read: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub reasons: BTreeMap<RejectReason, usize>,
}

impl IngestReport {
    fn reject(&mut self, reason: RejectReason) {
        self.rejected += 1;
        *self.reasons.entry(reason).or_default() += 1;
    }
}

/// Posts partitioned by UTC calendar day. Ids are unique.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    days: BTreeMap<NaiveDate, Vec<Post>>,
    ids: HashMap<String, NaiveDate>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.ids.contains_key(id)
    }

    pub fn get(&self, id: &str) -> Option<&Post> {
        let day = self.ids.get(id)?;
        self.days[day].iter().find(|p| p.id == id)
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.days.keys().copied()
    }

    pub fn posts_on(&self, day: NaiveDate) -> &[Post] {
        self.days.get(&day).map(Vec::as_slice).unwrap_or(&[])
    }

    /// All posts, day by day, in arrival order within a day.
    pub fn iter(&self) -> impl Iterator<Item = &Post> + '_ {
        self.days.values().flatten()
    }

    /// Inserts a post unless its id is already present. Returns whether it
    /// was inserted.
    pub fn insert(&mut self, post: Post) -> bool {
        if self.ids.contains_key(&post.id) {
            return false;
        }
        let day = post.day();
        self.ids.insert(post.id.clone(), day);
        self.days.entry(day).or_default().push(post);
        true
    }

    /// Reads records from `source`, validates them and adds the accepted ones.
    ///
    /// A malformed record is counted as a reject and reading continues; an I/O
    /// failure on the source aborts the whole ingest.
    pub fn ingest<R: Read>(
        &mut self,
        source: R,
        format: InputFormat,
        filter: &IngestFilter,
    ) -> Result<IngestReport, CorpusError> {
        let mut report = IngestReport::default();
        match format {
            InputFormat::Jsonl => {
                for line in BufReader::new(source).lines() {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    report.read += 1;
                    let raw = serde_json::from_str::<serde_json::Value>(&line)
                        .ok()
                        .and_then(|v| RawRecord::from_json(&v));
                    self.admit(raw, filter, &mut report);
                }
            }
            InputFormat::Csv => {
                let mut reader = csv::ReaderBuilder::new()
                    .flexible(true)
                    .from_reader(source);
                let headers = reader
                    .headers()
                    .map_err(|e| CorpusError::UnreadableCsv(e.to_string()))?
                    .clone();
                for record in reader.records() {
                    let raw = match record {
                        Ok(r) => RawRecord::from_csv(&headers, &r),
                        Err(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => {
                            return Err(CorpusError::UnreadableCsv(e.to_string()))
                        }
                        Err(_) => None,
                    };
                    report.read += 1;
                    self.admit(raw, filter, &mut report);
                }
            }
        }
        Ok(report)
    }

    fn admit(&mut self, raw: Option<RawRecord>, filter: &IngestFilter, report: &mut IngestReport) {
        let Some(raw) = raw else {
            report.reject(RejectReason::Malformed);
            return;
        };
        let Some(created_at) = parse_timestamp(&raw.created_at) else {
            report.reject(RejectReason::BadTimestamp);
            return;
        };
        if raw.text.trim().is_empty() {
            report.reject(RejectReason::EmptyText);
            return;
        }
        if !filter.accepts(&raw.lang, &raw.country) {
            report.reject(RejectReason::FilterMismatch);
            return;
        }
        let post = Post {
            id: raw.id,
            created_at,
            text: raw.text,
            lang: raw.lang,
            country: raw.country,
            retweet: raw.retweet,
        };
        if self.insert(post) {
            report.accepted += 1;
        } else {
            report.reject(RejectReason::DuplicateId);
        }
    }
}

/// Ingests `source` into a fresh corpus.
pub fn ingest_posts<R: Read>(
    source: R,
    format: InputFormat,
    filter: &IngestFilter,
) -> Result<(IngestReport, Corpus), CorpusError> {
    let mut corpus = Corpus::new();
    let report = corpus.ingest(source, format, filter)?;
    Ok((report, corpus))
}

struct RawRecord {
    id: String,
    created_at: String,
    text: String,
    lang: String,
    country: String,
    retweet: bool,
}

impl RawRecord {
    fn from_json(v: &serde_json::Value) -> Option<Self> {
        let obj = v.as_object()?;
        let string = |key: &str| match obj.get(key)? {
            serde_json::Value::String(s) => Some(s.clone()),
            serde_json::Value::Number(n) => Some(n.to_string()),
            _ => None,
        };
        let retweet = match obj.get("retweet") {
            None | Some(serde_json::Value::Null) => false,
            Some(serde_json::Value::Bool(b)) => *b,
            Some(_) => return None,
        };
        Some(RawRecord {
            id: string("id").filter(|s| !s.is_empty())?,
            created_at: string("created_at")?,
            text: string("text").unwrap_or_default(),
            lang: string("lang")?,
            country: string("country")?,
            retweet,
        })
    }

    fn from_csv(headers: &csv::StringRecord, record: &csv::StringRecord) -> Option<Self> {
        let field = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .and_then(|i| record.get(i))
        };
        let retweet = match field("retweet").map(|s| s.trim().to_ascii_lowercase()) {
            None => false,
            Some(s) => match s.as_str() {
                "" | "false" | "0" => false,
                "true" | "1" => true,
                _ => return None,
            },
        };
        Some(RawRecord {
            id: field("id").filter(|s| !s.is_empty())?.to_string(),
            created_at: field("created_at")?.to_string(),
            text: field("text").unwrap_or_default().to_string(),
            lang: field("lang")?.to_string(),
            country: field("country")?.to_string(),
            retweet,
        })
    }
}

/// Accepts RFC 3339 timestamps (any offset, normalized to UTC) and naive
/// ISO-8601 date-times, which are read as UTC.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(&Utc));
    }
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(s, fmt).ok())
        .map(|naive| naive.and_utc())
}
