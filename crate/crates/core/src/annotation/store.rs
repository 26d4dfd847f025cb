use std::collections::BTreeMap;
use std::path::Path;

use super::{LabelRecord, TrainingLabel};
use crate::corpus::{read_jsonl, write_jsonl, StoreError};
use crate::dimension::{Dimension, Label};

type Key = (String, Dimension, String);

/// Labels keyed on (post, dimension, coder); a later write replaces the
/// earlier one.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelStore {
    records: BTreeMap<Key, LabelRecord>,
}

impl LabelStore {
    pub fn from_records<I: IntoIterator<Item = LabelRecord>>(records: I) -> Self {
        let mut store = LabelStore::default();
        for r in records {
            store.upsert(r);
        }
        store
    }

    /// Builds a single-coder store from exported training rows.
    pub fn from_training_export(rows: &[TrainingLabel], coder_id: &str) -> Self {
        let epoch = chrono::DateTime::UNIX_EPOCH;
        Self::from_records(rows.iter().map(|r| LabelRecord {
            post_id: r.post_id.clone(),
            dimension: r.dimension,
            label: r.label.into(),
            coder_id: coder_id.to_string(),
            labeled_at: epoch,
        }))
    }

    pub fn upsert(&mut self, record: LabelRecord) {
        let key = (
            record.post_id.clone(),
            record.dimension,
            record.coder_id.clone(),
        );
        self.records.insert(key, record);
    }

    pub fn get(&self, post_id: &str, dimension: Dimension, coder_id: &str) -> Option<Label> {
        self.records
            .get(&(post_id.to_string(), dimension, coder_id.to_string()))
            .map(|r| r.label)
    }

    /// A coder has fully labeled a post once every dimension carries a
    /// record from them, skips included.
    pub fn fully_labeled(&self, coder_id: &str, post_id: &str) -> bool {
        Dimension::ALL
            .iter()
            .all(|d| self.get(post_id, *d, coder_id).is_some())
    }

    pub fn records(&self) -> impl Iterator<Item = &LabelRecord> {
        self.records.values()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Loads a label file; a missing file is an empty store.
    pub fn load(path: &Path) -> Result<Self, StoreError> {
        if !path.exists() {
            return Ok(LabelStore::default());
        }
        Ok(Self::from_records(read_jsonl::<LabelRecord>(path)?))
    }

    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        let records: Vec<&LabelRecord> = self.records.values().collect();
        write_jsonl(path, &records)
    }
}
