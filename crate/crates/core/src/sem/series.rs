use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::SemError;

/// A calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Option<Self> {
        (1..=12).contains(&month).then_some(YearMonth { year, month })
    }

    pub fn of(date: NaiveDate) -> Self {
        YearMonth {
            year: date.year(),
            month: date.month(),
        }
    }

    /// Months since year 0.
    pub fn ordinal(self) -> i64 {
        self.year as i64 * 12 + self.month as i64 - 1
    }

    pub fn from_ordinal(ord: i64) -> Self {
        YearMonth {
            year: ord.div_euclid(12) as i32,
            month: ord.rem_euclid(12) as u32 + 1,
        }
    }

    pub fn succ(self) -> Self {
        Self::from_ordinal(self.ordinal() + 1)
    }

    /// Quarter number 1–4.
    pub fn quarter(self) -> u32 {
        (self.month - 1) / 3 + 1
    }

    /// Inclusive month range.
    pub fn range(from: YearMonth, to: YearMonth) -> impl Iterator<Item = YearMonth> {
        (from.ordinal()..=to.ordinal()).map(YearMonth::from_ordinal)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = String;

    /// Accepts `YYYY-MM` or a full ISO date.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Ok(d) = s.parse::<NaiveDate>() {
            return Ok(YearMonth::of(d));
        }
        let bad = || format!("bad month {s:?} (expected YYYY-MM)");
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        YearMonth::new(year, month).ok_or_else(bad)
    }
}

impl TryFrom<String> for YearMonth {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<YearMonth> for String {
    fn from(m: YearMonth) -> String {
        m.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Monthly,
    Quarterly,
    Yearly,
}

impl Frequency {
    /// Index of the period containing `m`.
    fn period(self, m: YearMonth) -> i64 {
        match self {
            Frequency::Monthly => m.ordinal(),
            Frequency::Quarterly => m.year as i64 * 4 + m.quarter() as i64 - 1,
            Frequency::Yearly => m.year as i64,
        }
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Frequency::Monthly => "monthly",
            Frequency::Quarterly => "quarterly",
            Frequency::Yearly => "yearly",
        })
    }
}

/// A named series at its native frequency. Each observation is dated by a
/// month inside its period; periods are strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EconSeries {
    pub name: String,
    pub frequency: Frequency,
    observations: Vec<(YearMonth, f64)>,
}

impl EconSeries {
    pub fn new(
        name: impl Into<String>,
        frequency: Frequency,
        observations: Vec<(YearMonth, f64)>,
    ) -> Result<Self, SemError> {
        let name = name.into();
        for pair in observations.windows(2) {
            if frequency.period(pair[1].0) <= frequency.period(pair[0].0) {
                return Err(SemError::Unordered {
                    name,
                    at: pair[1].0,
                });
            }
        }
        if let Some((m, _)) = observations.iter().find(|(_, v)| !v.is_finite()) {
            return Err(SemError::NonFinite { name, at: *m });
        }
        Ok(EconSeries {
            name,
            frequency,
            observations,
        })
    }

    pub fn observations(&self) -> &[(YearMonth, f64)] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Monthly means of a daily series, skipping missing days; months
    /// without observations are omitted.
    pub fn monthly_means(name: impl Into<String>, daily: &[(NaiveDate, Option<f64>)]) -> Self {
        let mut sums: BTreeMap<YearMonth, (f64, usize)> = BTreeMap::new();
        for (d, v) in daily {
            if let Some(v) = v {
                let e = sums.entry(YearMonth::of(*d)).or_default();
                e.0 += v;
                e.1 += 1;
            }
        }
        EconSeries {
            name: name.into(),
            frequency: Frequency::Monthly,
            observations: sums.into_iter().map(|(m, (s, n))| (m, s / n as f64)).collect(),
        }
    }

    /// The series on the monthly grid: quarterly values interpolated,
    /// yearly values held constant within their year.
    pub fn to_monthly(&self) -> Result<EconSeries, SemError> {
        match self.frequency {
            Frequency::Monthly => Ok(self.clone()),
            Frequency::Quarterly => interpolate_quarterly_to_monthly(self),
            Frequency::Yearly => Ok(EconSeries {
                name: self.name.clone(),
                frequency: Frequency::Monthly,
                observations: self
                    .observations
                    .iter()
                    .flat_map(|(m, v)| (1..=12).map(move |k| (YearMonth { year: m.year, month: k }, *v)))
                    .collect(),
            }),
        }
    }
}

/// Anchors each quarter at its middle month and interpolates linearly
/// between anchors. Months of the first and last quarter outside the
/// anchors carry the nearest anchor value.
pub fn interpolate_quarterly_to_monthly(series: &EconSeries) -> Result<EconSeries, SemError> {
    if series.frequency != Frequency::Quarterly {
        return Err(SemError::WrongFrequency {
            name: series.name.clone(),
            expected: Frequency::Quarterly,
            got: series.frequency,
        });
    }
    if series.len() < 2 {
        return Err(SemError::TooFewObservations {
            name: series.name.clone(),
            needed: 2,
            got: series.len(),
        });
    }
    let anchors: Vec<(i64, f64)> = series
        .observations
        .iter()
        .map(|(m, v)| {
            let first = YearMonth::new(m.year, (m.quarter() - 1) * 3 + 1).expect("valid month");
            (first.ordinal() + 1, *v)
        })
        .collect();
    let start = anchors[0].0 - 1;
    let end = anchors[anchors.len() - 1].0 + 1;
    let mut observations = Vec::with_capacity((end - start + 1) as usize);
    let mut seg = 0;
    for t in start..=end {
        while seg + 1 < anchors.len() && anchors[seg + 1].0 <= t {
            seg += 1;
        }
        let (t0, v0) = anchors[seg];
        let value = if t <= anchors[0].0 {
            anchors[0].1
        } else if seg + 1 == anchors.len() {
            v0
        } else {
            let (t1, v1) = anchors[seg + 1];
            v0 + (v1 - v0) * (t - t0) as f64 / (t1 - t0) as f64
        };
        observations.push((YearMonth::from_ordinal(t), value));
    }
    Ok(EconSeries {
        name: series.name.clone(),
        frequency: Frequency::Monthly,
        observations,
    })
}
