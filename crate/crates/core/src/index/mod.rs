//! Daily component scores, the composite index, period aggregates, trends
//! and correlations.
//!
//! Stored values live on [0, 1]; tables and CSV files use the 0–100 scale.

mod aggregate;
mod io;
mod trend;

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dimension::{Category, Dimension};
use crate::estimator::{CategoryDistribution, EstimateReport};

pub use aggregate::{aggregate, ColumnSummary, Period, PeriodSummary, COLUMNS};
pub use io::{read_index_csv, write_index_csv, write_trend_csv};
pub use trend::{local_linear_trend, TrendPoint, DEFAULT_BANDWIDTH_DAYS};

/// Multiplier between stored values and rendered tables.
pub const REPORT_SCALE: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IndexError {
    #[error("score {value} for {column} on {date} is outside [0, 1]")]
    OutOfRange {
        date: NaiveDate,
        column: String,
        value: f64,
    },
    #[error("dates must be strictly increasing ({0} is out of order or repeated)")]
    Unordered(NaiveDate),
    #[error("empty series")]
    EmptySeries,
    #[error("need at least {needed} non-missing points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("bandwidth must be positive, got {0}")]
    Bandwidth(f64),
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("degenerate series")]
    Degenerate,
    #[error("{line}: {message}")]
    Csv { line: u64, message: String },
}

/// Component value: the positive share among opinionated mass.
/// Neutral and off-topic mass are ignored; `None` when nothing is opinionated.
pub fn component_score(pi: &CategoryDistribution) -> Option<f64> {
    let pos = pi.get(Category::Positive);
    let neg = pi.get(Category::Negative);
    let denom = pos + neg;
    (denom > 0.0).then(|| (pos / denom).clamp(0.0, 1.0))
}

/// Arithmetic mean of the eight components; missing if any is missing.
pub fn composite(scores: &[Option<f64>; 8]) -> Option<f64> {
    let mut sum = 0.0;
    for s in scores {
        sum += (*s)?;
    }
    Some(sum / scores.len() as f64)
}

/// Component scores of one day.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyComponents {
    pub date: NaiveDate,
    scores: [Option<f64>; 8],
    composite: Option<f64>,
}

impl DailyComponents {
    pub fn new(date: NaiveDate, scores: [Option<f64>; 8]) -> Result<Self, IndexError> {
        for d in Dimension::ALL {
            if let Some(v) = scores[d.index()] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(IndexError::OutOfRange {
                        date,
                        column: d.to_string(),
                        value: v,
                    });
                }
            }
        }
        Ok(DailyComponents {
            date,
            scores,
            composite: composite(&scores),
        })
    }

    pub fn score(&self, dimension: Dimension) -> Option<f64> {
        self.scores[dimension.index()]
    }

    pub fn scores(&self) -> &[Option<f64>; 8] {
        &self.scores
    }

    pub fn composite(&self) -> Option<f64> {
        self.composite
    }

    /// Value of column `i` in [`COLUMNS`] order: the eight dimensions then
    /// the composite.
    pub fn column(&self, i: usize) -> Option<f64> {
        if i < 8 {
            self.scores[i]
        } else {
            self.composite
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub corpus: String,
    pub settings: BTreeMap<String, String>,
}

/// Dated component rows with strictly increasing dates.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSeries {
    days: Vec<DailyComponents>,
    pub provenance: Provenance,
}

impl IndexSeries {
    pub fn new(days: Vec<DailyComponents>, provenance: Provenance) -> Result<Self, IndexError> {
        for pair in days.windows(2) {
            if pair[1].date <= pair[0].date {
                return Err(IndexError::Unordered(pair[1].date));
            }
        }
        Ok(IndexSeries { days, provenance })
    }

    /// One row per date present in `reports`; dimensions without an
    /// estimate on that date are missing.
    pub fn from_estimates(reports: &[EstimateReport], provenance: Provenance) -> Result<Self, IndexError> {
        let mut by_day: BTreeMap<NaiveDate, [Option<f64>; 8]> = BTreeMap::new();
        for r in reports {
            by_day.entry(r.date).or_insert([None; 8])[r.dimension.index()] =
                component_score(&r.distribution());
        }
        let days = by_day
            .into_iter()
            .map(|(date, scores)| DailyComponents::new(date, scores))
            .collect::<Result<_, _>>()?;
        Self::new(days, provenance)
    }

    pub fn days(&self) -> &[DailyComponents] {
        &self.days
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    /// `(date, value)` pairs for one column of [`COLUMNS`].
    pub fn column(&self, i: usize) -> Vec<(NaiveDate, Option<f64>)> {
        self.days.iter().map(|d| (d.date, d.column(i))).collect()
    }
}

/// Pearson correlation over the positions where both series are present.
pub fn pearson_correlation(a: &[Option<f64>], b: &[Option<f64>]) -> Result<f64, IndexError> {
    if a.len() != b.len() {
        return Err(IndexError::LengthMismatch(a.len(), b.len()));
    }
    let pairs: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .collect();
    if pairs.len() < 2 {
        return Err(IndexError::TooFewPoints {
            needed: 2,
            got: pairs.len(),
        });
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(IndexError::Degenerate);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
