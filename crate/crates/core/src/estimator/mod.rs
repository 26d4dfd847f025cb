//! Aggregated category-proportion estimation.
//!
//! Training posts give, for every category, the distribution of signatures
//! P(s | c). The signature frequencies `p` of an unlabeled test set then
//! satisfy `p ≈ Q π`, where `π` is the category distribution of the test set.
//! `π` is recovered directly by simplex-constrained ridge least squares,
//! without classifying any individual post.

mod bootstrap;
mod conditional;
mod lambda;
pub mod solver;
pub mod synthetic;

use chrono::NaiveDate;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::corpus::Signature;
use crate::dimension::{Category, Dimension};

pub use bootstrap::{bootstrap_se, BootstrapSettings};
pub use conditional::{build_conditional, ConditionalBuilder, ConditionalMatrix, ConditionalOptions, Row};
pub use lambda::{select_lambda, LambdaSelection, DEFAULT_LAMBDA_GRID};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EstimatorError {
    #[error("insufficient training coverage: {}", join(.0))]
    InsufficientCoverage(Vec<Category>),
    #[error("conditional matrix unusable: no training data for {}", join(.0))]
    Unusable(Vec<Category>),
    #[error("empty test set")]
    EmptyTest,
    #[error("bootstrap needs at least 2 replicates, got {0}")]
    TooFewReplicates(usize),
    #[error("{failed} of {total} bootstrap replicates failed")]
    BootstrapFailed { failed: usize, total: usize },
    #[error(transparent)]
    Solver(#[from] solver::SolverError),
}

fn join(cats: &[Category]) -> String {
    cats.iter().map(|c| c.name()).collect::<Vec<_>>().join(", ")
}

/// A point on the category simplex, with optional bootstrap standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryDistribution {
    pub proportions: [f64; Category::COUNT],
    pub standard_errors: Option<[f64; Category::COUNT]>,
}

impl CategoryDistribution {
    pub fn new(proportions: [f64; Category::COUNT]) -> Self {
        CategoryDistribution {
            proportions,
            standard_errors: None,
        }
    }

    pub fn get(&self, category: Category) -> f64 {
        self.proportions[category.index()]
    }

    pub fn se(&self, category: Category) -> Option<f64> {
        self.standard_errors.map(|s| s[category.index()])
    }

    /// L1 distance between the proportion vectors.
    pub fn l1(&self, other: &[f64; Category::COUNT]) -> f64 {
        self.proportions
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

/// Estimates the category distribution of `test` given the training
/// conditionals `q`.
///
/// Test signatures without a matrix row are ignored (they only occur when
/// the matrix was built without an EMPTY row). The result depends only on
/// the multiset frequencies of `test`, so shuffling or repeating the list
/// does not change it.
pub fn estimate_distribution(
    q: &ConditionalMatrix,
    test: &[Signature],
    lambda: f64,
) -> Result<CategoryDistribution, EstimatorError> {
    let unusable = q.unusable_categories();
    if !unusable.is_empty() {
        return Err(EstimatorError::Unusable(unusable));
    }
    if test.is_empty() {
        return Err(EstimatorError::EmptyTest);
    }
    let p = q.frequencies(test).ok_or(EstimatorError::EmptyTest)?;
    estimate_from_frequencies(q, &p, lambda)
}

pub(crate) fn estimate_from_frequencies(
    q: &ConditionalMatrix,
    p: &DVector<f64>,
    lambda: f64,
) -> Result<CategoryDistribution, EstimatorError> {
    let pi = solver::solve_simplex_ls(q.probabilities(), p, lambda)?;
    let mut proportions = [0.0; Category::COUNT];
    proportions.copy_from_slice(pi.as_slice());
    Ok(CategoryDistribution::new(proportions))
}

/// Baseline: label each test post with its most likely category under `q`
/// (lowest category index on ties) and report the label shares.
pub fn classify_and_count(q: &ConditionalMatrix, test: &[Signature]) -> Result<CategoryDistribution, EstimatorError> {
    if test.is_empty() {
        return Err(EstimatorError::EmptyTest);
    }
    let probs = q.probabilities();
    let mut tally = [0usize; Category::COUNT];
    let mut n = 0usize;
    for sig in test {
        let Some(r) = q.row_of(sig) else { continue };
        let row = probs.row(r);
        let best = (0..Category::COUNT)
            .fold(0, |best, c| if row[c] > row[best] { c } else { best });
        tally[best] += 1;
        n += 1;
    }
    if n == 0 {
        return Err(EstimatorError::EmptyTest);
    }
    Ok(CategoryDistribution::new(tally.map(|t| t as f64 / n as f64)))
}

/// Per-category values keyed by name, as written in reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryValues {
    pub positive: f64,
    pub neutral: f64,
    pub negative: f64,
    pub offtopic: f64,
}

impl From<[f64; Category::COUNT]> for CategoryValues {
    fn from(v: [f64; Category::COUNT]) -> Self {
        CategoryValues {
            positive: v[0],
            neutral: v[1],
            negative: v[2],
            offtopic: v[3],
        }
    }
}

impl From<CategoryValues> for [f64; Category::COUNT] {
    fn from(v: CategoryValues) -> Self {
        [v.positive, v.neutral, v.negative, v.offtopic]
    }
}

/// One (day, dimension) estimate as written to `estimates.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub dimension: Dimension,
    pub date: NaiveDate,
    pub proportions: CategoryValues,
    pub se: Option<CategoryValues>,
    pub n_train: u64,
    pub n_test: usize,
    pub lambda: f64,
    pub seed: u64,
}

impl EstimateReport {
    pub fn distribution(&self) -> CategoryDistribution {
        CategoryDistribution {
            proportions: self.proportions.into(),
            standard_errors: self.se.map(Into::into),
        }
    }
}
