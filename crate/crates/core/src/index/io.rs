use std::io::{Read, Write};

use chrono::NaiveDate;

use super::{composite, DailyComponents, IndexError, IndexSeries, Provenance, TrendPoint, COLUMNS, REPORT_SCALE};

/// Largest accepted gap between a stored composite and the one recomputed
/// from stored (rounded) components, on the 0–100 scale.
const COMPOSITE_TOLERANCE: f64 = 1e-3;

fn fmt_value(v: Option<f64>) -> String {
    v.map(|v| format!("{:.4}", v * REPORT_SCALE)).unwrap_or_default()
}

fn csv_error(line: u64, message: impl Into<String>) -> IndexError {
    IndexError::Csv {
        line,
        message: message.into(),
    }
}

/// Writes `date,emo,…,wor,swb` with values on the 0–100 scale, four decimals
/// and empty fields for missing values.
pub fn write_index_csv<W: Write>(series: &IndexSeries, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["date"];
    header.extend(COLUMNS);
    w.write_record(&header)?;
    for day in series.days() {
        let mut row = vec![day.date.to_string()];
        row.extend((0..COLUMNS.len()).map(|i| fmt_value(day.column(i))));
        w.write_record(&row)?;
    }
    w.flush()
}

/// Reads an index CSV back; a stored `swb` must agree with the mean of the
/// stored components and be present exactly when all eight are.
pub fn read_index_csv<R: Read>(input: R) -> Result<IndexSeries, IndexError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(|e| csv_error(1, e.to_string()))?.clone();
    let expected: Vec<&str> = std::iter::once("date").chain(COLUMNS).collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(csv_error(1, format!("expected header {}", expected.join(","))));
    }
    let mut days = Vec::new();
    for (i, record) in r.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| csv_error(line, e.to_string()))?;
        let date: NaiveDate = record[0]
            .parse()
            .map_err(|_| csv_error(line, format!("bad date {:?}", &record[0])))?;
        let mut values = [None; 9];
        for (k, v) in values.iter_mut().enumerate() {
            let field = record[k + 1].trim();
            if !field.is_empty() {
                let x: f64 = field
                    .parse()
                    .map_err(|_| csv_error(line, format!("bad value {field:?} in {}", COLUMNS[k])))?;
                *v = Some(x / REPORT_SCALE);
            }
        }
        let scores: [Option<f64>; 8] = values[..8].try_into().expect("eight components");
        match (composite(&scores), values[8]) {
            (Some(c), Some(stored)) if ((c - stored) * REPORT_SCALE).abs() > COMPOSITE_TOLERANCE => {
                return Err(csv_error(
                    line,
                    format!(
                        "swb {:.4} does not match component mean {:.4}",
                        stored * REPORT_SCALE,
                        c * REPORT_SCALE
                    ),
                ));
            }
            (Some(_), None) => return Err(csv_error(line, "swb missing although all components are present")),
            (None, Some(_)) => return Err(csv_error(line, "swb present although a component is missing")),
            _ => {}
        }
        days.push(DailyComponents::new(date, scores).map_err(|e| csv_error(line, e.to_string()))?);
    }
    IndexSeries::new(days, Provenance::default())
}

/// Writes `date,value,se` on the 0–100 scale.
pub fn write_trend_csv<W: Write>(points: &[TrendPoint], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "value", "se"])?;
    for p in points {
        w.write_record([p.date.to_string(), fmt_value(p.value), fmt_value(p.se)])?;
    }
    w.flush()
}
