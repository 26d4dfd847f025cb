//! Coder sessions, the label store and training-set export.
//!
//! Coding rules enforced here:
//! - off-topic posts are tagged explicitly, optionally through a shortcut
//!   that marks every dimension off-topic at once;
//! - an unsure coder skips, which stores `unlabeled` and keeps the post out
//!   of the training data (it is *not* off-topic);
//! - retweets are coded like original posts;
//! - each post is coded on all eight dimensions in parallel, dimensions that
//!   do not apply being left unlabeled.

mod store;

use std::collections::{BTreeMap, HashSet};

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dimension::{Category, Dimension, Label};
use crate::rng;

pub use store::LabelStore;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnnotationError {
    #[error("nothing to annotate")]
    NothingToAnnotate,
    #[error("unknown dimension {0:?}")]
    UnknownDimension(String),
    #[error("unknown label {label:?} for dimension {dimension}")]
    UnknownLabel { dimension: String, label: String },
    #[error("stale submission: expected post {expected:?}, got {got:?}")]
    StaleCursor { expected: Option<String>, got: String },
    #[error("empty training set for dimension {0}")]
    EmptyTrainingSet(Dimension),
}

/// One coder's judgment of one post on one dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub post_id: String,
    pub dimension: Dimension,
    pub label: Label,
    pub coder_id: String,
    pub labeled_at: DateTime<Utc>,
}

/// What a coder sends for the post under the cursor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Submission {
    /// Partial dimension → label map, as raw codes. Omitted dimensions are
    /// stored as unlabeled; an empty map is a skip.
    Labels(BTreeMap<String, String>),
    /// Shortcut: the post is off-topic on every dimension.
    AllOfftopic,
}

impl Submission {
    pub fn skip() -> Self {
        Submission::Labels(BTreeMap::new())
    }

    pub fn labels<'a, I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        Submission::Labels(
            pairs
                .into_iter()
                .map(|(d, l)| (d.to_string(), l.to_string()))
                .collect(),
        )
    }

    /// Validates the submission and expands it to one label per dimension.
    /// Any unknown dimension or label rejects the whole submission.
    pub fn resolve(&self) -> Result<[Label; 8], AnnotationError> {
        match self {
            Submission::AllOfftopic => Ok([Label::Offtopic; 8]),
            Submission::Labels(map) => {
                let mut out = [Label::Unlabeled; 8];
                for (dim, label) in map {
                    let d: Dimension = dim
                        .parse()
                        .map_err(|_| AnnotationError::UnknownDimension(dim.clone()))?;
                    out[d.index()] =
                        label
                            .parse()
                            .map_err(|_| AnnotationError::UnknownLabel {
                                dimension: dim.clone(),
                                label: label.clone(),
                            })?;
                }
                Ok(out)
            }
        }
    }
}

/// A coder's pass over a shuffled candidate queue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSession {
    pub session_id: String,
    pub coder_id: String,
    queue: Vec<String>,
    cursor: usize,
}

impl AnnotationSession {
    /// Builds the queue: the pool without duplicates and without posts this
    /// coder already submitted, shuffled with `shuffle_seed`.
    pub fn open<'a, I>(
        session_id: impl Into<String>,
        coder_id: impl Into<String>,
        candidate_pool: I,
        shuffle_seed: u64,
        store: &LabelStore,
    ) -> Result<Self, AnnotationError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let coder_id = coder_id.into();
        let mut seen = HashSet::new();
        let pool: Vec<String> = candidate_pool
            .into_iter()
            .filter(|id| seen.insert(*id))
            .map(str::to_string)
            .collect();
        if pool.is_empty() {
            return Err(AnnotationError::NothingToAnnotate);
        }
        let mut queue: Vec<String> = pool
            .into_iter()
            .filter(|id| !store.fully_labeled(&coder_id, id))
            .collect();
        let mut rng = rng::substream(shuffle_seed, "session", 0);
        queue.shuffle(&mut rng);
        Ok(AnnotationSession {
            session_id: session_id.into(),
            coder_id,
            queue,
            cursor: 0,
        })
    }

    pub fn current(&self) -> Option<&str> {
        self.queue.get(self.cursor).map(String::as_str)
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn queue(&self) -> &[String] {
        &self.queue
    }

    /// Posts not yet submitted, including the current one.
    pub fn remaining(&self) -> usize {
        self.queue.len() - self.cursor
    }

    /// Stores the labels for the post under the cursor and advances.
    /// Returns the new cursor.
    pub fn submit(
        &mut self,
        store: &mut LabelStore,
        post_id: &str,
        submission: &Submission,
        now: DateTime<Utc>,
    ) -> Result<usize, AnnotationError> {
        if self.current() != Some(post_id) {
            return Err(AnnotationError::StaleCursor {
                expected: self.current().map(str::to_string),
                got: post_id.to_string(),
            });
        }
        let labels = submission.resolve()?;
        for dimension in Dimension::ALL {
            store.upsert(LabelRecord {
                post_id: post_id.to_string(),
                dimension,
                label: labels[dimension.index()],
                coder_id: self.coder_id.clone(),
                labeled_at: now,
            });
        }
        self.cursor += 1;
        Ok(self.cursor)
    }
}

/// One row of a training export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingLabel {
    pub post_id: String,
    pub dimension: Dimension,
    pub label: Category,
}

/// Adjudicated labels for one dimension, sorted by post id.
///
/// Skips never appear. With several coders the majority label wins; among
/// tied labels the one given most recently wins.
pub fn export_training_set(
    store: &LabelStore,
    dimension: Dimension,
) -> Result<Vec<TrainingLabel>, AnnotationError> {
    // post -> category -> (votes, latest time)
    let mut tally: BTreeMap<&str, BTreeMap<Category, (usize, DateTime<Utc>)>> = BTreeMap::new();
    for rec in store.records().filter(|r| r.dimension == dimension) {
        let Some(category) = rec.label.category() else {
            continue;
        };
        let entry = tally
            .entry(rec.post_id.as_str())
            .or_default()
            .entry(category)
            .or_insert((0, rec.labeled_at));
        entry.0 += 1;
        entry.1 = entry.1.max(rec.labeled_at);
    }
    if tally.is_empty() {
        return Err(AnnotationError::EmptyTrainingSet(dimension));
    }
    Ok(tally
        .into_iter()
        .map(|(post_id, votes)| {
            let (label, _) = votes
                .into_iter()
                .max_by(|a, b| (a.1 .0, a.1 .1).cmp(&(b.1 .0, b.1 .1)))
                .expect("non-empty tally");
            TrainingLabel {
                post_id: post_id.to_string(),
                dimension,
                label,
            }
        })
        .collect())
}

/// Number of distinct posts with at least one non-skip label, per dimension.
pub fn progress(store: &LabelStore) -> BTreeMap<Dimension, usize> {
    let mut posts: BTreeMap<Dimension, HashSet<&str>> =
        Dimension::ALL.into_iter().map(|d| (d, HashSet::new())).collect();
    for rec in store.records().filter(|r| r.label != Label::Unlabeled) {
        posts
            .get_mut(&rec.dimension)
            .expect("all dimensions present")
            .insert(&rec.post_id);
    }
    posts.into_iter().map(|(d, s)| (d, s.len())).collect()
}
