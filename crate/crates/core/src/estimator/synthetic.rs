//! Synthetic labeled corpora with known category proportions.
//!
//! Every category emits single-id signatures uniformly from a support of
//! `support` ids. A pool of `round(overlap · support)` ids belongs to every
//! support; the remaining ids are unique to their category, so each
//! category shares exactly the `overlap` fraction of its support with each
//! of the others.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;

use super::{build_conditional, classify_and_count, estimate_distribution, CategoryDistribution, ConditionalOptions, EstimatorError};
use crate::corpus::Signature;
use crate::dimension::Category;
use crate::rng::substream;

#[derive(Debug, Clone)]
pub struct SyntheticGenerator {
    supports: Vec<Vec<u32>>,
}

impl SyntheticGenerator {
    pub fn new(support: usize, overlap: f64) -> Self {
        assert!(support > 0 && (0.0..1.0).contains(&overlap));
        let shared = (overlap * support as f64).round() as u32;
        let unique = support as u32 - shared;
        let supports = (0..Category::COUNT as u32)
            .map(|c| (0..shared).chain((0..unique).map(|j| shared + c * unique + j)).collect())
            .collect();
        SyntheticGenerator { supports }
    }

    pub fn support(&self, category: Category) -> &[u32] {
        &self.supports[category.index()]
    }

    pub fn signature<R: Rng>(&self, category: Category, rng: &mut R) -> Signature {
        let ids = &self.supports[category.index()];
        Signature::from_indices([ids[rng.random_range(0..ids.len())]])
    }

    /// `per_category` labeled examples for each category.
    pub fn training<R: Rng>(&self, per_category: usize, rng: &mut R) -> Vec<(Signature, Category)> {
        let mut out = Vec::with_capacity(per_category * Category::COUNT);
        for c in Category::ALL {
            for _ in 0..per_category {
                out.push((self.signature(c, rng), c));
            }
        }
        out
    }

    /// `n` unlabeled signatures whose categories are drawn from `truth`.
    pub fn test<R: Rng>(&self, n: usize, truth: &[f64; Category::COUNT], rng: &mut R) -> Vec<Signature> {
        let sampler = WeightedIndex::new(truth.iter().copied()).expect("valid proportions");
        (0..n)
            .map(|_| self.signature(Category::ALL[sampler.sample(rng)], rng))
            .collect()
    }
}

/// One seeded mixture experiment: the aggregate estimate and the
/// classify-and-count baseline on the same data.
#[derive(Debug, Clone)]
pub struct MixtureTrial {
    pub estimate: CategoryDistribution,
    pub baseline: CategoryDistribution,
}

#[derive(Debug, Clone, Copy)]
pub struct MixtureSetup {
    pub support: usize,
    pub overlap: f64,
    pub per_category: usize,
    pub n_test: usize,
    pub lambda: f64,
}

impl Default for MixtureSetup {
    fn default() -> Self {
        MixtureSetup {
            support: 60,
            overlap: 0.3,
            per_category: 500,
            n_test: 10_000,
            lambda: 0.0,
        }
    }
}

pub fn mixture_trial(setup: MixtureSetup, truth: &[f64; Category::COUNT], seed: u64) -> Result<MixtureTrial, EstimatorError> {
    let g = SyntheticGenerator::new(setup.support, setup.overlap);
    let training = g.training(setup.per_category, &mut substream(seed, "synthetic-training", 0));
    let test = g.test(setup.n_test, truth, &mut substream(seed, "synthetic-test", 0));
    let q = build_conditional(&training, ConditionalOptions::default())?;
    Ok(MixtureTrial {
        estimate: estimate_distribution(&q, &test, setup.lambda)?,
        baseline: classify_and_count(&q, &test)?,
    })
}
