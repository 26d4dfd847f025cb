//! `sem`: panel + model syntax → fitted coefficient table.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;

use swb_core::index::{read_index_csv, COLUMNS};
use swb_core::sem::{
    build_panel, builtin_swb_model, fit_ml, parse_frequencies, parse_model, read_panel_csv, render_csv, render_text,
    EconSeries, SemModel, YearMonth,
};

use crate::config::{read_file, read_text, write_artifact, RunConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Args)]
pub struct SemArgs {
    /// Panel CSV: a `date` column of months and one column per variable.
    #[arg(long)]
    pub panel: PathBuf,
    /// Column-frequency JSON; defaults to `<panel stem>.frequencies.json`
    /// next to the panel.
    #[arg(long)]
    pub frequencies: Option<PathBuf>,
    /// Model syntax file; the built-in well-being model when absent.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    /// First month (YYYY-MM) of the estimation window.
    #[arg(long)]
    pub from: Option<YearMonth>,
    /// Last month (YYYY-MM) of the estimation window.
    #[arg(long)]
    pub to: Option<YearMonth>,
    /// Daily index CSV whose monthly composite means become the `swb` column.
    #[arg(long)]
    pub swb_index: Option<PathBuf>,
    #[arg(long, default_value = "Structural model")]
    pub title: String,
    /// Print the CSV coefficient table instead of the text table.
    #[arg(long)]
    pub csv: bool,
}

pub fn default_frequencies_path(panel: &Path) -> PathBuf {
    let stem = panel.file_stem().unwrap_or_default().to_string_lossy();
    panel.with_file_name(format!("{stem}.frequencies.json"))
}

fn load_model(path: Option<&Path>) -> Result<SemModel> {
    match path {
        Some(p) => Ok(parse_model(&read_text(p)?).map_err(swb_core::sem::SemError::from)?),
        None => Ok(builtin_swb_model()),
    }
}

fn window(args: &SemArgs) -> Result<Option<(YearMonth, YearMonth)>> {
    match (args.from, args.to) {
        (None, None) => Ok(None),
        (Some(a), Some(b)) if a <= b => Ok(Some((a, b))),
        (Some(_), Some(_)) => Err(CliError::Config("--from must not be after --to".into())),
        _ => Err(CliError::Config("--from and --to go together".into())),
    }
}

pub fn sem(config: &RunConfig, args: &SemArgs, out: &mut dyn Write) -> Result<()> {
    let model = load_model(args.model_file.as_deref())?;
    let freq_path = args.frequencies.clone().unwrap_or_else(|| default_frequencies_path(&args.panel));
    let frequencies = parse_frequencies(&read_text(&freq_path)?)?;
    let mut series = read_panel_csv(read_file(&args.panel)?.as_slice(), &frequencies)?;
    if let Some(path) = &args.swb_index {
        let index = read_index_csv(read_file(path)?.as_slice())?;
        let swb = COLUMNS.iter().position(|c| *c == "swb").expect("composite column");
        series.retain(|s| s.name != "swb");
        series.push(EconSeries::monthly_means("swb", &index.column(swb)));
    }
    // listwise deletion only over the variables the model uses
    series.retain(|s| model.observed().contains(&s.name));
    let panel = build_panel(&series, window(args)?)?;
    let s = panel.covariance(model.observed())?;
    let fit = fit_ml(&model, &s, panel.n())?;

    let mut text = render_text(&args.title, &model, &fit);
    if let (Some(first), Some(last)) = (panel.months.first(), panel.months.last()) {
        text.push_str(&format!("Months: {first} – {last} ({} used, {} dropped)\n", panel.n(), panel.dropped));
    }
    let csv = render_csv(&model, &fit);
    if config.has_corpus() {
        let json = serde_json::to_string_pretty(&fit).expect("fit serializes") + "\n";
        write_artifact(config, "sem", "sem.txt", text.as_bytes())?;
        write_artifact(config, "sem", "sem.csv", csv.as_bytes())?;
        write_artifact(config, "sem", "sem.json", json.as_bytes())?;
    }
    let body = if args.csv { &csv } else { &text };
    out.write_all(body.as_bytes()).map_err(CliError::io("<stdout>"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequencies_sidecar_sits_next_to_the_panel() {
        assert_eq!(
            default_frequencies_path(Path::new("/d/japan.csv")),
            PathBuf::from("/d/japan.frequencies.json")
        );
    }
}
