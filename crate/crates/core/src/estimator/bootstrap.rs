use rand::Rng;
use rayon::prelude::*;

use super::{build_conditional, estimate_distribution, CategoryDistribution, ConditionalOptions, EstimatorError};
use crate::corpus::Signature;
use crate::dimension::Category;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapSettings {
    pub options: ConditionalOptions,
    pub lambda: f64,
    pub replicates: usize,
    pub seed: u64,
}

/// Point estimate plus bootstrap standard errors.
///
/// Each replicate resamples the training examples with replacement within
/// their category (so every category keeps its size) and the test list with
/// replacement, then refits. Replicate `b` draws from its own seeded
/// substream, so the result does not depend on thread scheduling.
pub fn bootstrap_se(
    training: &[(Signature, Category)],
    test: &[Signature],
    settings: &BootstrapSettings,
) -> Result<CategoryDistribution, EstimatorError> {
    if settings.replicates < 2 {
        return Err(EstimatorError::TooFewReplicates(settings.replicates));
    }
    let q = build_conditional(training, settings.options)?;
    let mut point = estimate_distribution(&q, test, settings.lambda)?;

    let mut by_category: [Vec<&Signature>; Category::COUNT] = Default::default();
    for (sig, cat) in training {
        by_category[cat.index()].push(sig);
    }

    let replicates: Vec<Option<CategoryDistribution>> = (0..settings.replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::substream(settings.seed, "bootstrap", b as u64);
            let mut resampled = Vec::with_capacity(training.len());
            for (c, pool) in by_category.iter().enumerate() {
                for _ in 0..pool.len() {
                    let s = pool[rng.random_range(0..pool.len())];
                    resampled.push((s.clone(), Category::ALL[c]));
                }
            }
            let test_sample: Vec<Signature> = (0..test.len())
                .map(|_| test[rng.random_range(0..test.len())].clone())
                .collect();
            let q = build_conditional(&resampled, settings.options).ok()?;
            estimate_distribution(&q, &test_sample, settings.lambda).ok()
        })
        .collect();

    let ok: Vec<&CategoryDistribution> = replicates.iter().flatten().collect();
    let failed = settings.replicates - ok.len();
    if failed * 2 > settings.replicates || ok.len() < 2 {
        return Err(EstimatorError::BootstrapFailed {
            failed,
            total: settings.replicates,
        });
    }
    let mut se = [0.0; Category::COUNT];
    for (c, slot) in se.iter_mut().enumerate() {
        let n = ok.len() as f64;
        let mean = ok.iter().map(|d| d.proportions[c]).sum::<f64>() / n;
        let ss: f64 = ok.iter().map(|d| (d.proportions[c] - mean).powi(2)).sum();
        *slot = (ss / (n - 1.0)).sqrt();
    }
    point.standard_errors = Some(se);
    Ok(point)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(i: u32) -> Signature {
        Signature::from_indices([i])
    }

    fn identity() -> Vec<(Signature, Category)> {
        Category::ALL
            .into_iter()
            .enumerate()
            .map(|(i, c)| (sig(i as u32), c))
            .collect()
    }

    fn settings(replicates: usize, seed: u64) -> BootstrapSettings {
        BootstrapSettings {
            options: ConditionalOptions {
                alpha: 0.0,
                rare_threshold: 0,
                empty_row: false,
            },
            lambda: 0.0,
            replicates,
            seed,
        }
    }

    #[test]
    fn degenerate_case_has_zero_variance() {
        let test = vec![sig(2); 50];
        let d = bootstrap_se(&identity(), &test, &settings(50, 1)).unwrap();
        assert_eq!(d.get(Category::Negative), 1.0);
        assert_eq!(d.se(Category::Negative), Some(0.0));
    }

    #[test]
    fn seeded_and_validated() {
        let mut training = identity();
        training.extend([(sig(1), Category::Positive), (sig(0), Category::Neutral)]);
        let test: Vec<_> = (0..40).map(|i| sig(i % 4)).collect();
        let a = bootstrap_se(&training, &test, &settings(30, 5)).unwrap();
        let b = bootstrap_se(&training, &test, &settings(30, 5)).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            bootstrap_se(&training, &test, &settings(1, 5)),
            Err(EstimatorError::TooFewReplicates(1))
        ));
    }
}
