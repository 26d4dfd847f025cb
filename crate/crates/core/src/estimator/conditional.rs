use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::EstimatorError;
use crate::corpus::Signature;
use crate::dimension::Category;

const K: usize = Category::COUNT;

/// Settings for turning training counts into signature-given-category
/// probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalOptions {
    /// Additive smoothing added to every cell.
    pub alpha: f64,
    /// Signatures seen at most this many times in training share one RARE
    /// row. Zero disables collapsing.
    pub rare_threshold: u64,
    /// Keep a row for the empty signature even when training never produced
    /// one. Unseen test signatures are mapped onto it.
    pub empty_row: bool,
}

impl Default for ConditionalOptions {
    fn default() -> Self {
        ConditionalOptions {
            alpha: 0.5,
            rare_threshold: 1,
            empty_row: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Row {
    Signature(Signature),
    Rare,
    Empty,
}

impl fmt::Display for Row {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Row::Signature(s) => write!(f, "{s}"),
            Row::Rare => f.write_str("RARE"),
            Row::Empty => f.write_str("EMPTY"),
        }
    }
}

/// Incremental training counts. Building from the union of several batches
/// gives the same matrix as building from one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalBuilder {
    options: ConditionalOptions,
    counts: BTreeMap<Signature, [u64; K]>,
    totals: [u64; K],
}

impl ConditionalBuilder {
    pub fn new(options: ConditionalOptions) -> Self {
        ConditionalBuilder {
            options,
            counts: BTreeMap::new(),
            totals: [0; K],
        }
    }

    pub fn options(&self) -> &ConditionalOptions {
        &self.options
    }

    pub fn add(&mut self, signature: Signature, category: Category) {
        self.counts.entry(signature).or_insert([0; K])[category.index()] += 1;
        self.totals[category.index()] += 1;
    }

    /// Adds a batch of labeled examples.
    pub fn augment<I>(&mut self, examples: I)
    where
        I: IntoIterator<Item = (Signature, Category)>,
    {
        for (s, c) in examples {
            self.add(s, c);
        }
    }

    pub fn totals(&self) -> [u64; K] {
        self.totals
    }

    pub fn missing_categories(&self) -> Vec<Category> {
        Category::ALL
            .into_iter()
            .filter(|c| self.totals[c.index()] == 0)
            .collect()
    }

    /// Builds the matrix, flagging categories without training examples as
    /// unusable instead of failing.
    pub fn build(&self) -> ConditionalMatrix {
        let ConditionalOptions {
            alpha,
            rare_threshold,
            empty_row,
        } = self.options;

        let mut rows = Vec::new();
        let mut row_counts: Vec<[u64; K]> = Vec::new();
        let mut lookup = HashMap::new();
        let mut rare = [0u64; K];
        let mut collapsed = Vec::new();
        let mut empty = None;
        for (sig, counts) in &self.counts {
            if sig.is_empty() {
                empty = Some(*counts);
                continue;
            }
            if counts.iter().sum::<u64>() <= rare_threshold {
                for (r, c) in rare.iter_mut().zip(counts) {
                    *r += c;
                }
                collapsed.push(sig.clone());
                continue;
            }
            lookup.insert(sig.clone(), rows.len());
            rows.push(Row::Signature(sig.clone()));
            row_counts.push(*counts);
        }
        let rare_row = (!collapsed.is_empty()).then(|| {
            rows.push(Row::Rare);
            row_counts.push(rare);
            rows.len() - 1
        });
        for sig in collapsed {
            lookup.insert(sig, rare_row.expect("rare row exists"));
        }
        let empty_row = (empty.is_some() || empty_row).then(|| {
            rows.push(Row::Empty);
            row_counts.push(empty.unwrap_or([0; K]));
            rows.len() - 1
        });

        let n_rows = rows.len();
        let mut probs = DMatrix::zeros(n_rows, K);
        let mut usable = [false; K];
        for c in 0..K {
            let denom = self.totals[c] as f64 + alpha * n_rows as f64;
            usable[c] = self.totals[c] > 0;
            for r in 0..n_rows {
                probs[(r, c)] = if usable[c] && denom > 0.0 {
                    (row_counts[r][c] as f64 + alpha) / denom
                } else {
                    1.0 / n_rows as f64
                };
            }
        }
        ConditionalMatrix {
            rows,
            lookup,
            rare_row,
            empty_row,
            probs,
            counts: self.totals,
            usable,
        }
    }

    /// Like [`build`](Self::build) but fails when a category has no examples.
    pub fn build_checked(&self) -> Result<ConditionalMatrix, EstimatorError> {
        let missing = self.missing_categories();
        if !missing.is_empty() {
            return Err(EstimatorError::InsufficientCoverage(missing));
        }
        Ok(self.build())
    }
}

/// Builds P(signature | category) from labeled training signatures.
pub fn build_conditional(
    training: &[(Signature, Category)],
    options: ConditionalOptions,
) -> Result<ConditionalMatrix, EstimatorError> {
    let mut builder = ConditionalBuilder::new(options);
    builder.augment(training.iter().cloned());
    builder.build_checked()
}

/// Column-stochastic matrix of signature probabilities per category.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMatrix {
    rows: Vec<Row>,
    lookup: HashMap<Signature, usize>,
    rare_row: Option<usize>,
    empty_row: Option<usize>,
    probs: DMatrix<f64>,
    counts: [u64; K],
    usable: [bool; K],
}

impl ConditionalMatrix {
    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn probabilities(&self) -> &DMatrix<f64> {
        &self.probs
    }

    pub fn entry(&self, row: usize, category: Category) -> f64 {
        self.probs[(row, category.index())]
    }

    /// Training documents per category.
    pub fn counts(&self) -> [u64; K] {
        self.counts
    }

    pub fn n_train(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn is_usable(&self, category: Category) -> bool {
        self.usable[category.index()]
    }

    pub fn unusable_categories(&self) -> Vec<Category> {
        Category::ALL
            .into_iter()
            .filter(|c| !self.is_usable(*c))
            .collect()
    }

    /// Row a signature is counted in. Rare training signatures go to RARE;
    /// the empty signature and signatures never seen in training go to
    /// EMPTY, or nowhere when the matrix has no EMPTY row.
    pub fn row_of(&self, signature: &Signature) -> Option<usize> {
        if signature.is_empty() {
            return self.empty_row;
        }
        self.lookup.get(signature).copied().or(self.empty_row)
    }

    pub fn rare_row(&self) -> Option<usize> {
        self.rare_row
    }

    pub fn empty_row(&self) -> Option<usize> {
        self.empty_row
    }

    /// Empirical row frequencies of a test list. Signatures without a row
    /// are dropped; `None` if nothing remains.
    pub fn frequencies(&self, test: &[Signature]) -> Option<DVector<f64>> {
        let mut counts = vec![0u64; self.rows.len()];
        let mut total = 0u64;
        for sig in test {
            if let Some(r) = self.row_of(sig) {
                counts[r] += 1;
                total += 1;
            }
        }
        (total > 0).then(|| DVector::from_iterator(counts.len(), counts.iter().map(|&c| c as f64 / total as f64)))
    }
}
