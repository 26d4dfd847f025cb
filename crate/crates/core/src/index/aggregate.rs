use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::IndexSeries;

/// Column names in index order: the eight dimensions, then the composite.
pub const COLUMNS: [&str; 9] = ["emo", "sat", "vit", "res", "fun", "tru", "rel", "wor", "swb"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Period {
    /// ISO-8601 week.
    Week,
    Month,
    Year,
}

impl FromStr for Period {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "week" => Ok(Period::Week),
            "month" => Ok(Period::Month),
            "year" => Ok(Period::Year),
            other => Err(format!("unknown period {other:?} (week, month or year)")),
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Period::Week => "week",
            Period::Month => "month",
            Period::Year => "year",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum PeriodKey {
    Week(i32, u32),
    Month(i32, u32),
    Year(i32),
}

impl PeriodKey {
    fn of(date: NaiveDate, period: Period) -> Self {
        match period {
            Period::Week => {
                let w = date.iso_week();
                PeriodKey::Week(w.year(), w.week())
            }
            Period::Month => PeriodKey::Month(date.year(), date.month()),
            Period::Year => PeriodKey::Year(date.year()),
        }
    }

    fn label(self) -> String {
        match self {
            PeriodKey::Week(y, w) => format!("{y}-W{w:02}"),
            PeriodKey::Month(y, m) => format!("{y}-{m:02}"),
            PeriodKey::Year(y) => format!("{y}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub mean: Option<f64>,
    /// Sample standard deviation (n − 1); missing below two observations.
    pub sd: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSummary {
    pub period: String,
    pub first_day: NaiveDate,
    pub columns: [ColumnSummary; 9],
}

impl PeriodSummary {
    pub fn column(&self, name: &str) -> Option<&ColumnSummary> {
        COLUMNS.iter().position(|c| *c == name).map(|i| &self.columns[i])
    }
}

fn summarize(values: &[f64]) -> ColumnSummary {
    let n = values.len();
    if n == 0 {
        return ColumnSummary { mean: None, sd: None, n };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (n > 1).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    ColumnSummary {
        mean: Some(mean),
        sd,
        n,
    }
}

/// Per-period mean and sample SD of every column, skipping missing days.
/// Periods without any observation are omitted.
pub fn aggregate(series: &IndexSeries, period: Period) -> Vec<PeriodSummary> {
    let mut buckets: BTreeMap<PeriodKey, (NaiveDate, [Vec<f64>; 9])> = BTreeMap::new();
    for day in series.days() {
        let entry = buckets
            .entry(PeriodKey::of(day.date, period))
            .or_insert_with(|| (day.date, Default::default()));
        for (i, values) in entry.1.iter_mut().enumerate() {
            if let Some(v) = day.column(i) {
                values.push(v);
            }
        }
    }
    buckets
        .into_iter()
        .filter(|(_, (_, cols))| cols.iter().any(|c| !c.is_empty()))
        .map(|(key, (first_day, cols))| PeriodSummary {
            period: key.label(),
            first_day,
            columns: std::array::from_fn(|i| summarize(&cols[i])),
        })
        .collect()
}
