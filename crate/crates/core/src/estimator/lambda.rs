use serde::{Deserialize, Serialize};

use super::{build_conditional, estimate_distribution, ConditionalOptions, EstimatorError};
use crate::corpus::Signature;
use crate::dimension::Category;

pub const DEFAULT_LAMBDA_GRID: [f64; 4] = [0.0, 1e-4, 1e-3, 1e-2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSelection {
    pub grid: Vec<f64>,
    /// Summed held-out L1 error for each grid value.
    pub errors: Vec<f64>,
    pub lambda: f64,
}

/// Picks the ridge weight by held-out reconstruction of pure category blocks.
///
/// For each category, every second training example of that category is
/// held out, the matrix is rebuilt from the rest, and the held-out block is
/// estimated; its true distribution is the vertex of that category. The
/// score of a grid value is the L1 error summed over categories. Ties go to
/// the smaller value. Categories with fewer than two examples are skipped.
pub fn select_lambda(
    training: &[(Signature, Category)],
    options: ConditionalOptions,
    grid: &[f64],
) -> Result<LambdaSelection, EstimatorError> {
    let mut errors = vec![0.0; grid.len()];
    for category in Category::ALL {
        let members: Vec<usize> = training
            .iter()
            .enumerate()
            .filter(|(_, (_, c))| *c == category)
            .map(|(i, _)| i)
            .collect();
        if members.len() < 2 {
            continue;
        }
        let held: Vec<usize> = members.iter().copied().skip(1).step_by(2).collect();
        let mut keep = vec![true; training.len()];
        for &i in &held {
            keep[i] = false;
        }
        let fit: Vec<(Signature, Category)> = training
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(e, _)| e.clone())
            .collect();
        let test: Vec<Signature> = held.iter().map(|&i| training[i].0.clone()).collect();
        let q = build_conditional(&fit, options)?;
        let mut truth = [0.0; Category::COUNT];
        truth[category.index()] = 1.0;
        for (err, &lambda) in errors.iter_mut().zip(grid) {
            *err += estimate_distribution(&q, &test, lambda)?.l1(&truth);
        }
    }
    let best = errors
        .iter()
        .enumerate()
        .fold(0, |best, (i, e)| if *e < errors[best] - 1e-12 { i } else { best });
    Ok(LambdaSelection {
        grid: grid.to_vec(),
        lambda: grid.get(best).copied().unwrap_or(0.0),
        errors,
    })
}
