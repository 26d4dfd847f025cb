//! The `swb` command line: ingest → select → annotate → estimate → index →
//! aggregate / trend / corr → sem → report.
//!
//! Every subcommand is callable in-process through [`main_with`], which is
//! what the binary and the integration tests use.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;
pub mod server;
pub mod structural;
pub mod tables;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "swb", version, about = "Subjective well-being indices from short social-media posts")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Directory holding corpus stores.
    #[arg(long, global = true, env = "SWB_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
    /// Corpus id inside the data directory.
    #[arg(long, global = true)]
    pub corpus: Option<String>,
    /// Root seed; every random stage derives a named substream from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Ridge weight; selected per dimension from a small grid when absent.
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Additive smoothing of the conditional matrix.
    #[arg(long, global = true, default_value_t = 0.5)]
    pub alpha: f64,
    /// Vocabulary size per dimension.
    #[arg(long, global = true, default_value_t = 2000)]
    pub max_features: usize,
    /// Bootstrap replicates for standard errors (0 disables).
    #[arg(long, global = true, default_value_t = 0)]
    pub bootstrap: usize,
    /// Trend bandwidth in days.
    #[arg(long, global = true, default_value_t = swb_core::index::DEFAULT_BANDWIDTH_DAYS)]
    pub bandwidth: f64,
}

impl GlobalArgs {
    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            seed: self.seed,
            lambda: self.lambda,
            alpha: self.alpha,
            max_features: self.max_features,
            bootstrap: self.bootstrap,
            bandwidth: self.bandwidth,
            ..RunConfig::new(self.data_dir.clone(), self.corpus.clone())
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read a posts file into the corpus store, partitioned by day.
    Ingest(pipeline::IngestArgs),
    /// Select keyword-matched training candidates per dimension.
    Select(pipeline::SelectArgs),
    /// Serve the annotation HTTP API.
    ServeAnnotation(server::ServeArgs),
    /// Write the adjudicated training set from the label store.
    ExportLabels(pipeline::ExportArgs),
    /// Estimate category distributions for every day and dimension.
    Estimate(pipeline::EstimateArgs),
    /// Build the daily index CSV from the estimates.
    Index(pipeline::IndexArgs),
    /// Weekly, monthly or yearly means and standard deviations.
    Aggregate(tables::AggregateArgs),
    /// Local-linear trend of one index column.
    Trend(tables::TrendArgs),
    /// Correlations between yearly index values and external indicators.
    Corr(tables::CorrArgs),
    /// Fit a structural equation model to an economic panel.
    Sem(structural::SemArgs),
    /// Assemble the produced artifacts into one document.
    Report(report::ReportArgs),
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let config = cli.global.run_config();
    config.validate()?;
    match cli.command {
        Command::Ingest(a) => pipeline::ingest(&config, &a, out),
        Command::Select(a) => pipeline::select(&config, &a, out),
        Command::ServeAnnotation(a) => server::serve(&config, &a, out),
        Command::ExportLabels(a) => pipeline::export_labels(&config, &a, out),
        Command::Estimate(a) => pipeline::estimate(&config, &a, out),
        Command::Index(a) => pipeline::index(&config, &a, out),
        Command::Aggregate(a) => tables::aggregate(&config, &a, out),
        Command::Trend(a) => tables::trend(&config, &a, out),
        Command::Corr(a) => tables::corr(&config, &a, out),
        Command::Sem(a) => structural::sem(&config, &a, out),
        Command::Report(a) => report::report(&config, &a, out),
    }
}

/// Parses `args` and runs the command. Usage errors print clap's text and
/// return 2; command failures print one JSON line to `err` and return the
/// module's exit status.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match run(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{}", e.to_json_line());
            e.exit_status()
        }
    }
}
