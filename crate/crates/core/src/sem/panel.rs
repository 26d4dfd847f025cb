use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{EconSeries, Frequency, SemError, YearMonth};

/// Mean and standard deviation removed from a raw column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub sd: f64,
}

impl Standardization {
    pub fn to_raw(&self, z: f64) -> f64 {
        z * self.sd + self.mean
    }
}

/// Aligned, listwise-complete, standardized monthly matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub months: Vec<YearMonth>,
    pub names: Vec<String>,
    /// Standardized values, one row per month.
    pub data: DMatrix<f64>,
    pub transforms: Vec<Standardization>,
    /// Months in the range dropped for a missing cell.
    pub dropped: usize,
}

impl Panel {
    pub fn n(&self) -> usize {
        self.months.len()
    }

    /// Sample covariance (n − 1) of the named columns, in the given order.
    pub fn covariance(&self, names: &[String]) -> Result<DMatrix<f64>, SemError> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.names
                    .iter()
                    .position(|c| c == n)
                    .ok_or_else(|| SemError::MissingVariable(n.clone()))
            })
            .collect::<Result<_, _>>()?;
        let rows = self.data.nrows();
        if rows < 2 {
            return Err(SemError::EmptyPanel);
        }
        let cols = DMatrix::from_fn(rows, idx.len(), |r, c| self.data[(r, idx[c])]);
        // columns are already centred
        Ok(cols.transpose() * &cols / (rows - 1) as f64)
    }
}

/// Converts every series to monthly, aligns them over `range` (or the span
/// of all series), drops months with any missing value and standardizes
/// each column to mean 0 and sample variance 1.
pub fn build_panel(series: &[EconSeries], range: Option<(YearMonth, YearMonth)>) -> Result<Panel, SemError> {
    if series.is_empty() {
        return Err(SemError::EmptyPanel);
    }
    let mut seen = HashSet::new();
    let mut monthly = Vec::with_capacity(series.len());
    for s in series {
        if !seen.insert(s.name.as_str()) {
            return Err(SemError::DuplicateColumn(s.name.clone()));
        }
        let m = s.to_monthly()?;
        monthly.push(m.observations().iter().copied().collect::<BTreeMap<_, _>>());
    }
    let (from, to) = match range {
        Some(r) => r,
        None => {
            let first = monthly.iter().filter_map(|m| m.keys().next()).min();
            let last = monthly.iter().filter_map(|m| m.keys().next_back()).max();
            match (first, last) {
                (Some(f), Some(l)) => (*f, *l),
                _ => return Err(SemError::EmptyPanel),
            }
        }
    };
    let mut months = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dropped = 0;
    for month in YearMonth::range(from, to) {
        let row: Option<Vec<f64>> = monthly.iter().map(|m| m.get(&month).copied()).collect();
        match row {
            Some(r) => {
                months.push(month);
                rows.push(r);
            }
            None => dropped += 1,
        }
    }
    if rows.len() < 2 {
        return Err(SemError::EmptyPanel);
    }
    let n = rows.len();
    let mut data = DMatrix::from_fn(n, series.len(), |r, c| rows[r][c]);
    let mut transforms = Vec::with_capacity(series.len());
    for (c, s) in series.iter().enumerate() {
        let mut col = data.column_mut(c);
        let mean = col.sum() / n as f64;
        col.add_scalar_mut(-mean);
        let sd = (col.norm_squared() / (n - 1) as f64).sqrt();
        if sd <= 1e-12 * mean.abs().max(1.0) {
            return Err(SemError::ConstantColumn(s.name.clone()));
        }
        col /= sd;
        // second pass removes the rounding left by the first
        let m2 = col.sum() / n as f64;
        col.add_scalar_mut(-m2);
        let sd2 = (col.norm_squared() / (n - 1) as f64).sqrt();
        col /= sd2;
        transforms.push(Standardization { mean, sd });
    }
    Ok(Panel {
        months,
        names: series.iter().map(|s| s.name.clone()).collect(),
        data,
        transforms,
        dropped,
    })
}

fn csv_error(line: u64, message: impl Into<String>) -> SemError {
    SemError::Csv {
        line,
        message: message.into(),
    }
}

/// Reads a panel CSV (`date` column of months, one column per variable)
/// with its column-frequency sidecar (`{"gdp": "quarterly", ...}`).
/// Non-monthly columns hold one value per period; repeats of the same
/// value within a period are tolerated.
pub fn read_panel_csv<R: Read>(input: R, frequencies: &BTreeMap<String, Frequency>) -> Result<Vec<EconSeries>, SemError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(|e| csv_error(1, e.to_string()))?.clone();
    if headers.get(0) != Some("date") {
        return Err(csv_error(1, "first column must be `date`"));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut freqs = Vec::with_capacity(names.len());
    for n in &names {
        freqs.push(
            *frequencies
                .get(n)
                .ok_or_else(|| SemError::Sidecar(format!("no frequency declared for column {n:?}")))?,
        );
    }
    let mut columns: Vec<Vec<(YearMonth, f64)>> = vec![Vec::new(); names.len()];
    for (i, record) in r.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| csv_error(line, e.to_string()))?;
        let month: YearMonth = record[0].parse().map_err(|e: String| csv_error(line, e))?;
        for (c, col) in columns.iter_mut().enumerate() {
            let field = record.get(c + 1).unwrap_or("").trim();
            if field.is_empty() {
                continue;
            }
            let v: f64 = field
                .parse()
                .map_err(|_| csv_error(line, format!("bad value {field:?} in {}", names[c])))?;
            let same_period = col.last().is_some_and(|(m, last)| {
                *last == v
                    && match freqs[c] {
                        Frequency::Monthly => false,
                        Frequency::Quarterly => m.year == month.year && m.quarter() == month.quarter(),
                        Frequency::Yearly => m.year == month.year,
                    }
            });
            if !same_period {
                col.push((month, v));
            }
        }
    }
    names
        .into_iter()
        .zip(freqs)
        .zip(columns)
        .map(|((name, f), obs)| EconSeries::new(name, f, obs))
        .collect()
}

pub fn parse_frequencies(json: &str) -> Result<BTreeMap<String, Frequency>, SemError> {
    serde_json::from_str(json).map_err(|e| SemError::Sidecar(e.to_string()))
}

/// Writes series at their native dates into one CSV; returns the sidecar
/// JSON declaring each column's frequency.
pub fn write_panel_csv<W: Write>(series: &[EconSeries], out: W) -> Result<String, SemError> {
    let mut months: Vec<YearMonth> = series
        .iter()
        .flat_map(|s| s.observations().iter().map(|(m, _)| *m))
        .collect();
    months.sort();
    months.dedup();
    let lookup: Vec<BTreeMap<YearMonth, f64>> = series
        .iter()
        .map(|s| s.observations().iter().copied().collect())
        .collect();
    let io = |e: csv::Error| csv_error(0, e.to_string());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["date".to_string()];
    header.extend(series.iter().map(|s| s.name.clone()));
    w.write_record(&header).map_err(io)?;
    for m in months {
        let mut row = vec![m.to_string()];
        row.extend(lookup.iter().map(|l| l.get(&m).map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| csv_error(0, e.to_string()))?;
    let sidecar: BTreeMap<&str, Frequency> = series.iter().map(|s| (s.name.as_str(), s.frequency)).collect();
    Ok(serde_json::to_string_pretty(&sidecar).expect("frequency map serializes"))
}
