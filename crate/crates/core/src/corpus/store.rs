//! On-disk layout of a corpus store.
//!
//! ```text
//! <data-dir>/<corpus-id>/
//!   manifest.json
//!   days/YYYY-MM-DD.jsonl
//!   candidates/<dimension>.jsonl
//!   labels.jsonl
//!   artifacts/
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Corpus, Post};
use crate::dimension::Dimension;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("corpus {0:?} does not exist")]
    Missing(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    corpus_id: String,
    total: usize,
    days: BTreeMap<NaiveDate, usize>,
}

/// Paths of one corpus under a data directory.
#[derive(Debug, Clone)]
pub struct CorpusLayout {
    id: String,
    root: PathBuf,
}

impl CorpusLayout {
    pub fn new(data_dir: impl AsRef<Path>, corpus_id: &str) -> Self {
        CorpusLayout {
            id: corpus_id.to_string(),
            root: data_dir.as_ref().join(corpus_id),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn exists(&self) -> bool {
        self.manifest_path().is_file()
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn days_dir(&self) -> PathBuf {
        self.root.join("days")
    }

    pub fn candidates_path(&self, dimension: Dimension) -> PathBuf {
        self.root.join("candidates").join(format!("{dimension}.jsonl"))
    }

    pub fn labels_path(&self) -> PathBuf {
        self.root.join("labels.jsonl")
    }

    pub fn artifacts_dir(&self) -> PathBuf {
        self.root.join("artifacts")
    }

    /// Writes every day bucket and the manifest, replacing previous content.
    pub fn save(&self, corpus: &Corpus) -> Result<(), StoreError> {
        let days_dir = self.days_dir();
        if days_dir.exists() {
            fs::remove_dir_all(&days_dir).map_err(io_err(&days_dir))?;
        }
        fs::create_dir_all(&days_dir).map_err(io_err(&days_dir))?;
        let mut manifest = Manifest {
            corpus_id: self.id.clone(),
            total: corpus.len(),
            days: BTreeMap::new(),
        };
        for day in corpus.days() {
            let posts = corpus.posts_on(day);
            write_jsonl(&days_dir.join(format!("{day}.jsonl")), posts)?;
            manifest.days.insert(day, posts.len());
        }
        let path = self.manifest_path();
        let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, body + "\n").map_err(io_err(&path))
    }

    pub fn load(&self) -> Result<Corpus, StoreError> {
        if !self.exists() {
            return Err(StoreError::Missing(self.id.clone()));
        }
        let path = self.manifest_path();
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| StoreError::Parse {
            path: path.clone(),
            line: e.line(),
            message: e.to_string(),
        })?;
        let mut corpus = Corpus::new();
        for day in manifest.days.keys() {
            let posts: Vec<Post> = read_jsonl(&self.days_dir().join(format!("{day}.jsonl")))?;
            for post in posts {
                corpus.insert(post);
            }
        }
        Ok(corpus)
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), StoreError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).expect("record serializes");
        writeln!(out, "{line}").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, StoreError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut items = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| StoreError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        items.push(item);
    }
    Ok(items)
}
