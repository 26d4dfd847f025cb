//! Table-producing subcommands (aggregate, trend, corr) and the plain-text
//! table renderer they share.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;

use swb_core::fixtures::{self, Country, YearlyRow};
use swb_core::index::{
    aggregate as aggregate_series, local_linear_trend, pearson_correlation, read_index_csv, write_trend_csv,
    IndexSeries, Period, PeriodSummary, COLUMNS,
};

use crate::config::{read_file, read_text, write_artifact, RunConfig};
use crate::error::{CliError, Result};
use crate::pipeline::default_index_path;

/// Left-aligned first column, right-aligned others, two spaces apart.
pub fn render_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| -> String {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| {
                let pad = " ".repeat(w - c.chars().count());
                if i == 0 {
                    format!("{c}{pad}")
                } else {
                    format!("{pad}{c}")
                }
            })
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = line(header);
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1)));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(CliError::io("<stdout>"))
}

fn load_index(config: &RunConfig, input: &Option<PathBuf>, fixture: Option<Country>) -> Result<IndexSeries> {
    if let Some(country) = fixture {
        return Ok(fixtures::components(country));
    }
    let path = match input {
        Some(p) => p.clone(),
        None => default_index_path(config)?,
    };
    Ok(read_index_csv(read_file(&path)?.as_slice())?)
}

// ---------------------------------------------------------------- aggregate

#[derive(Debug, Args)]
pub struct AggregateArgs {
    #[arg(long, default_value = "year")]
    pub period: Period,
    /// Index CSV; defaults to the corpus's `artifacts/index.csv`.
    #[arg(long, conflicts_with = "fixture")]
    pub input: Option<PathBuf>,
    /// Use a bundled yearly component table instead (italy or japan).
    #[arg(long)]
    pub fixture: Option<Country>,
    /// Print CSV instead of the aligned table.
    #[arg(long)]
    pub csv: bool,
}

fn scaled(v: Option<f64>, scale: f64, decimals: usize) -> String {
    v.map(|v| format!("{:.*}", decimals, v * scale)).unwrap_or_default()
}

pub fn aggregate_text(summaries: &[PeriodSummary], scale: f64) -> String {
    let mut header = vec!["period".to_string()];
    header.extend(COLUMNS.iter().map(|c| c.to_string()));
    let rows: Vec<Vec<String>> = summaries
        .iter()
        .map(|s| {
            let mut row = vec![s.period.clone()];
            row.extend(s.columns.iter().map(|c| match (c.mean, c.sd) {
                (Some(m), Some(sd)) => format!("{:.1} ({:.1})", m * scale, sd * scale),
                (Some(m), None) => format!("{:.1}", m * scale),
                _ => "–".to_string(),
            }));
            row
        })
        .collect();
    render_table(&header, &rows)
}

pub fn aggregate_csv(summaries: &[PeriodSummary], scale: f64) -> String {
    let mut out = String::from("period,first_day,column,mean,sd,n\n");
    for s in summaries {
        for (name, c) in COLUMNS.iter().zip(&s.columns) {
            out.push_str(&format!(
                "{},{},{name},{},{},{}\n",
                s.period,
                s.first_day,
                scaled(c.mean, scale, 4),
                scaled(c.sd, scale, 4),
                c.n
            ));
        }
    }
    out
}

pub fn aggregate(config: &RunConfig, args: &AggregateArgs, out: &mut dyn Write) -> Result<()> {
    let series = load_index(config, &args.input, args.fixture)?;
    let summaries = aggregate_series(&series, args.period);
    let text = aggregate_text(&summaries, config.report_scale);
    let csv = aggregate_csv(&summaries, config.report_scale);
    if config.has_corpus() {
        let stem = format!("aggregate_{}", args.period);
        write_artifact(config, "aggregate", &format!("{stem}.txt"), text.as_bytes())?;
        write_artifact(config, "aggregate", &format!("{stem}.csv"), csv.as_bytes())?;
    }
    emit(out, if args.csv { &csv } else { &text })
}

// ---------------------------------------------------------------- trend

#[derive(Debug, Args)]
pub struct TrendArgs {
    /// Index column to smooth.
    #[arg(long, default_value = "swb")]
    pub column: String,
    /// Index CSV; defaults to the corpus's `artifacts/index.csv`.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

pub fn trend(config: &RunConfig, args: &TrendArgs, out: &mut dyn Write) -> Result<()> {
    let column = COLUMNS
        .iter()
        .position(|c| *c == args.column)
        .ok_or_else(|| CliError::Config(format!("unknown column {:?} (one of {})", args.column, COLUMNS.join(", "))))?;
    let series = load_index(config, &args.input, None)?;
    let points = local_linear_trend(&series.column(column), config.bandwidth)?;
    let mut body = Vec::new();
    write_trend_csv(&points, &mut body).map_err(CliError::io("trend.csv"))?;
    if config.has_corpus() {
        let name = if args.column == "swb" { "trend.csv".to_string() } else { format!("trend_{}.csv", args.column) };
        write_artifact(config, "trend", &name, &body)?;
    }
    out.write_all(&body).map_err(CliError::io("<stdout>"))
}

// ---------------------------------------------------------------- corr

#[derive(Debug, Args)]
pub struct CorrArgs {
    /// Bundled yearly table(s): italy, japan; both when neither this nor
    /// `--yearly` is given.
    #[arg(long)]
    pub fixture: Vec<Country>,
    /// Yearly CSV (`year,swb,swb_sd,tweets_millions,hpi,hdi`).
    #[arg(long)]
    pub yearly: Option<PathBuf>,
    /// Index name used for `--yearly` rows.
    #[arg(long, default_value = "SWB")]
    pub name: String,
    #[arg(long)]
    pub csv: bool,
}

/// One index/indicator pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrRow {
    pub index: String,
    pub indicator: &'static str,
    pub r: f64,
    pub years: usize,
}

pub fn correlations(name: &str, rows: &[YearlyRow]) -> Result<Vec<CorrRow>> {
    let swb: Vec<Option<f64>> = rows.iter().map(|r| Some(r.swb)).collect();
    let mut out = Vec::new();
    for (indicator, values) in [
        ("HDI", rows.iter().map(|r| r.hdi).collect::<Vec<_>>()),
        ("HPI", rows.iter().map(|r| r.hpi).collect::<Vec<_>>()),
    ] {
        let years = values.iter().filter(|v| v.is_some()).count();
        out.push(CorrRow {
            index: name.to_string(),
            indicator,
            r: pearson_correlation(&swb, &values)?,
            years,
        });
    }
    Ok(out)
}

pub fn corr(config: &RunConfig, args: &CorrArgs, out: &mut dyn Write) -> Result<()> {
    let mut rows = Vec::new();
    if let Some(path) = &args.yearly {
        let parsed = fixtures::parse_yearly(&read_text(path)?)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        rows.extend(correlations(&args.name, &parsed)?);
    }
    let countries = if args.fixture.is_empty() && args.yearly.is_none() {
        Country::ALL.to_vec()
    } else {
        args.fixture.clone()
    };
    for c in countries {
        rows.extend(correlations(c.index_name(), &fixtures::yearly(c))?);
    }
    let header: Vec<String> = ["index", "indicator", "r", "years"].iter().map(|s| s.to_string()).collect();
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.index.clone(), r.indicator.to_string(), format!("{:.2}", r.r), r.years.to_string()])
        .collect();
    let text = render_table(&header, &cells);
    let mut csv = String::from("index,indicator,r,years\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{:.6},{}\n", r.index, r.indicator, r.r, r.years));
    }
    if config.has_corpus() {
        write_artifact(config, "corr", "corr.txt", text.as_bytes())?;
        write_artifact(config, "corr", "corr.csv", csv.as_bytes())?;
    }
    emit(out, if args.csv { &csv } else { &text })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_alignment() {
        let header = vec!["a".to_string(), "value".to_string()];
        let rows = vec![vec!["long name".to_string(), "1".to_string()]];
        let t = render_table(&header, &rows);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "a          value");
        assert_eq!(lines[2], "long name      1");
    }

    #[test]
    fn japan_fixture_correlations() {
        let rows = correlations("SWB-J", &fixtures::yearly(Country::Japan)).unwrap();
        assert_eq!(format!("{:.2}", rows[0].r), "-0.99");
        assert_eq!(rows[1].years, 4);
    }
}
