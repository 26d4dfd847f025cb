//! Corpus-side subcommands: ingest, select, export-labels, estimate, index.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use swb_core::annotation::{export_training_set, AnnotationError, LabelStore, TrainingLabel};
use swb_core::corpus::{
    builtin_keywords, read_jsonl, select_training_candidates, signature_of, tokenize, write_jsonl, Corpus,
    IngestFilter, InputFormat, KeywordList, ScriptMode, Signature, Vocabulary,
};
use swb_core::estimator::{
    bootstrap_se, build_conditional, estimate_distribution, select_lambda, BootstrapSettings, ConditionalMatrix,
    ConditionalOptions, EstimateReport, LambdaSelection, DEFAULT_LAMBDA_GRID,
};
use swb_core::index::{write_index_csv, IndexSeries, Provenance};
use swb_core::rng::stable_hash;
use swb_core::{Category, Dimension};

use crate::config::{read_file, read_text, write_artifact, RunConfig};
use crate::error::{CliError, Result};

pub const ESTIMATES: &str = "estimates.jsonl";
pub const ESTIMATOR_META: &str = "estimator.json";
pub const INDEX: &str = "index.csv";
pub const TRAINING: &str = "training.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Script {
    /// Unspaced when most posts are in Japanese, Chinese or Thai.
    Auto,
    Spaced,
    Unspaced,
}

impl Script {
    pub fn resolve(self, corpus: &Corpus) -> ScriptMode {
        match self {
            Script::Spaced => ScriptMode::Spaced,
            Script::Unspaced => ScriptMode::Unspaced,
            Script::Auto => {
                let unspaced = corpus
                    .iter()
                    .filter(|p| matches!(p.lang.to_ascii_lowercase().as_str(), "ja" | "zh" | "th"))
                    .count();
                if unspaced * 2 > corpus.len() {
                    ScriptMode::Unspaced
                } else {
                    ScriptMode::Spaced
                }
            }
        }
    }
}

fn print_json(out: &mut dyn Write, value: serde_json::Value) -> Result<()> {
    writeln!(out, "{value}").map_err(CliError::io("<stdout>"))
}

fn dimensions(arg: &str) -> Result<Vec<Dimension>> {
    if arg == "all" {
        return Ok(Dimension::ALL.to_vec());
    }
    arg.split(',')
        .map(|d| d.parse::<Dimension>().map_err(|e| CliError::Config(e.to_string())))
        .collect()
}

// ---------------------------------------------------------------- ingest

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Posts file (JSONL or CSV).
    #[arg(long)]
    pub input: PathBuf,
    /// Input format; inferred from the file extension when absent.
    #[arg(long)]
    pub format: Option<String>,
    /// Keep only posts in this language.
    #[arg(long)]
    pub lang: Option<String>,
    /// Keep only posts from this country.
    #[arg(long)]
    pub country: Option<String>,
}

pub fn ingest(config: &RunConfig, args: &IngestArgs, out: &mut dyn Write) -> Result<()> {
    let layout = config.layout()?;
    let format: InputFormat = match &args.format {
        Some(f) => f.parse()?,
        None => match args.input.extension().and_then(|e| e.to_str()) {
            Some("csv") => InputFormat::Csv,
            _ => InputFormat::Jsonl,
        },
    };
    let filter = IngestFilter::new(args.lang.as_deref(), args.country.as_deref())?;
    let source = read_file(&args.input)?;
    let mut corpus = if layout.exists() { layout.load()? } else { Corpus::new() };
    let report = corpus.ingest(source.as_slice(), format, &filter)?;
    layout.save(&corpus)?;
    print_json(
        out,
        json!({
            "corpus": layout.id(),
            "read": report.read,
            "accepted": report.accepted,
            "rejected": report.rejected,
            "reasons": report.reasons,
            "total": corpus.len(),
        }),
    )
}

// ---------------------------------------------------------------- select

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Dimension code, comma-separated codes, or `all`.
    #[arg(long, default_value = "all")]
    pub dimension: String,
    /// Keyword file (single dimension) or directory of `<dim>.txt` files;
    /// the bundled lists are used when absent.
    #[arg(long)]
    pub keywords: Option<PathBuf>,
    /// Maximum candidates per dimension.
    #[arg(long, default_value_t = 500)]
    pub limit: usize,
    #[arg(long, value_enum, default_value_t = Script::Auto)]
    pub script: Script,
}

fn keyword_list(args: &SelectArgs, dimension: Dimension, several: bool) -> Result<KeywordList> {
    let Some(path) = &args.keywords else {
        return Ok(builtin_keywords(dimension));
    };
    let file = if path.is_dir() {
        path.join(format!("{dimension}.txt"))
    } else if several {
        return Err(CliError::Config("--keywords must be a directory when selecting several dimensions".into()));
    } else {
        path.clone()
    };
    Ok(KeywordList::parse(dimension, &read_text(&file)?)?)
}

pub fn select(config: &RunConfig, args: &SelectArgs, out: &mut dyn Write) -> Result<()> {
    let layout = config.existing_layout()?;
    let corpus = layout.load()?;
    let mode = args.script.resolve(&corpus);
    let dims = dimensions(&args.dimension)?;
    let mut counts = BTreeMap::new();
    for &d in &dims {
        let keywords = keyword_list(args, d, dims.len() > 1)?;
        let picked = select_training_candidates(&corpus, &keywords, args.limit, config.seed, mode);
        write_jsonl(&layout.candidates_path(d), &picked)?;
        counts.insert(d.to_string(), picked.len());
    }
    print_json(out, json!({ "corpus": layout.id(), "candidates": counts }))
}

// ---------------------------------------------------------------- export

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Destination; defaults to `training.jsonl` in the corpus directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn export_labels(config: &RunConfig, args: &ExportArgs, out: &mut dyn Write) -> Result<()> {
    let layout = config.existing_layout()?;
    let labels = layout.labels_path();
    if !labels.exists() {
        return Err(CliError::Config(format!("no label store at {}", labels.display())));
    }
    let store = LabelStore::load(&labels)?;
    let mut rows = Vec::new();
    let mut counts = BTreeMap::new();
    for d in Dimension::ALL {
        match export_training_set(&store, d) {
            Ok(set) => {
                counts.insert(d.to_string(), set.len());
                rows.extend(set);
            }
            Err(AnnotationError::EmptyTrainingSet(_)) => {
                counts.insert(d.to_string(), 0);
            }
            Err(e) => return Err(e.into()),
        }
    }
    if rows.is_empty() {
        return Err(AnnotationError::EmptyTrainingSet(Dimension::Emo).into());
    }
    let path = args.output.clone().unwrap_or_else(|| layout.root().join(TRAINING));
    write_jsonl(&path, &rows)?;
    print_json(out, json!({ "output": path, "labels": counts }))
}

// ---------------------------------------------------------------- estimate

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Training export; defaults to `training.jsonl` in the corpus directory.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Worker threads for the (day, dimension) fan-out. Results do not
    /// depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = Script::Auto)]
    pub script: Script,
}

/// Everything fixed per dimension before the per-day fan-out.
struct Prepared {
    dimension: Dimension,
    vocabulary: Vocabulary,
    training: Vec<(Signature, Category)>,
    q: ConditionalMatrix,
    lambda: f64,
    selection: Option<LambdaSelection>,
    unmatched: usize,
}

#[derive(Serialize)]
struct DimensionMeta {
    n_train: u64,
    unmatched_labels: usize,
    vocabulary: usize,
    lambda: f64,
    lambda_selection: Option<LambdaSelection>,
}

fn estimator_error(dimension: Dimension) -> impl FnOnce(swb_core::estimator::EstimatorError) -> CliError {
    move |source| CliError::Estimator {
        dimension: dimension.to_string(),
        source,
    }
}

fn prepare(
    config: &RunConfig,
    corpus: &Corpus,
    dimension: Dimension,
    labels: &[&TrainingLabel],
    mode: ScriptMode,
    options: ConditionalOptions,
) -> Result<Prepared> {
    let mut unmatched = 0;
    let mut examples: Vec<(Vec<String>, Category)> = Vec::with_capacity(labels.len());
    for l in labels {
        match corpus.get(&l.post_id) {
            Some(post) => examples.push((tokenize(&post.text, mode), l.label)),
            None => unmatched += 1,
        }
    }
    let vocabulary = Vocabulary::build(examples.iter().map(|(t, _)| t.as_slice()), config.max_features);
    let training: Vec<(Signature, Category)> = examples
        .iter()
        .map(|(t, c)| (signature_of(t, &vocabulary, config.max_features), *c))
        .collect();
    let q = build_conditional(&training, options).map_err(estimator_error(dimension))?;
    let (lambda, selection) = match config.lambda {
        Some(l) => (l, None),
        None => {
            let s = select_lambda(&training, options, &DEFAULT_LAMBDA_GRID).map_err(estimator_error(dimension))?;
            (s.lambda, Some(s))
        }
    };
    Ok(Prepared {
        dimension,
        vocabulary,
        training,
        q,
        lambda,
        selection,
        unmatched,
    })
}

fn estimate_one(config: &RunConfig, prepared: &Prepared, corpus: &Corpus, day: NaiveDate, mode: ScriptMode, options: ConditionalOptions) -> Result<EstimateReport> {
    let test: Vec<Signature> = corpus
        .posts_on(day)
        .iter()
        .map(|p| signature_of(&tokenize(&p.text, mode), &prepared.vocabulary, config.max_features))
        .collect();
    let dist = if config.bootstrap > 0 {
        let settings = BootstrapSettings {
            options,
            lambda: prepared.lambda,
            replicates: config.bootstrap,
            seed: stable_hash(&format!("{}/{}/{day}", config.seed, prepared.dimension)),
        };
        bootstrap_se(&prepared.training, &test, &settings)
    } else {
        estimate_distribution(&prepared.q, &test, prepared.lambda)
    }
    .map_err(estimator_error(prepared.dimension))?;
    Ok(EstimateReport {
        dimension: prepared.dimension,
        date: day,
        proportions: dist.proportions.into(),
        se: dist.standard_errors.map(Into::into),
        n_train: prepared.q.n_train(),
        n_test: test.len(),
        lambda: prepared.lambda,
        seed: config.seed,
    })
}

pub fn estimate(config: &RunConfig, args: &EstimateArgs, out: &mut dyn Write) -> Result<()> {
    let layout = config.existing_layout()?;
    let labels_path = args.labels.clone().unwrap_or_else(|| layout.root().join(TRAINING));
    if !labels_path.exists() {
        return Err(CliError::Config(format!("training labels {} do not exist", labels_path.display())));
    }
    let workers = match args.workers {
        Some(0) => return Err(CliError::Config("--workers must be positive".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    let corpus = layout.load()?;
    let labels: Vec<TrainingLabel> = read_jsonl(&labels_path)?;
    let mode = args.script.resolve(&corpus);
    let options = ConditionalOptions {
        alpha: config.alpha,
        ..ConditionalOptions::default()
    };

    let mut by_dimension: BTreeMap<Dimension, Vec<&TrainingLabel>> = BTreeMap::new();
    for l in &labels {
        by_dimension.entry(l.dimension).or_default().push(l);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;

    let (prepared, reports) = pool.install(|| -> Result<_> {
        let prepared: Vec<Prepared> = by_dimension
            .par_iter()
            .map(|(d, ls)| prepare(config, &corpus, *d, ls, mode, options))
            .collect::<Result<_>>()?;
        let items: Vec<(NaiveDate, &Prepared)> = corpus
            .days()
            .flat_map(|day| prepared.iter().map(move |p| (day, p)))
            .collect();
        let reports: Vec<EstimateReport> = items
            .par_iter()
            .map(|(day, p)| estimate_one(config, p, &corpus, *day, mode, options))
            .collect::<Result<_>>()?;
        Ok((prepared, reports))
    })?;

    let mut body = Vec::new();
    for r in &reports {
        serde_json::to_writer(&mut body, r).expect("report serializes");
        body.push(b'\n');
    }
    let path = write_artifact(config, "estimate", ESTIMATES, &body)?;
    let meta: BTreeMap<String, DimensionMeta> = prepared
        .into_iter()
        .map(|p| {
            (
                p.dimension.to_string(),
                DimensionMeta {
                    n_train: p.q.n_train(),
                    unmatched_labels: p.unmatched,
                    vocabulary: p.vocabulary.len(),
                    lambda: p.lambda,
                    lambda_selection: p.selection,
                },
            )
        })
        .collect();
    let meta_text = serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n";
    write_artifact(config, "estimate", ESTIMATOR_META, meta_text.as_bytes())?;
    print_json(out, json!({ "artifact": path, "rows": reports.len(), "dimensions": meta.len() }))
}

// ---------------------------------------------------------------- index

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Estimates file; defaults to the corpus's `artifacts/estimates.jsonl`.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

pub fn provenance(config: &RunConfig) -> Provenance {
    let mut settings = BTreeMap::new();
    settings.insert("seed".into(), config.seed.to_string());
    settings.insert("lambda".into(), config.lambda.map(|l| l.to_string()).unwrap_or_else(|| "auto".into()));
    settings.insert("alpha".into(), config.alpha.to_string());
    settings.insert("max_features".into(), config.max_features.to_string());
    settings.insert("bootstrap".into(), config.bootstrap.to_string());
    Provenance {
        corpus: config.corpus.clone().unwrap_or_default(),
        settings,
    }
}

pub fn index(config: &RunConfig, args: &IndexArgs, out: &mut dyn Write) -> Result<()> {
    let layout = config.existing_layout()?;
    let input = args.input.clone().unwrap_or_else(|| layout.artifacts_dir().join(ESTIMATES));
    if !input.exists() {
        return Err(CliError::Config(format!("estimates {} do not exist (run `estimate` first)", input.display())));
    }
    let reports: Vec<EstimateReport> = read_jsonl(&input)?;
    let series = IndexSeries::from_estimates(&reports, provenance(config))?;
    let mut body = Vec::new();
    write_index_csv(&series, &mut body).map_err(CliError::io(INDEX))?;
    let path = write_artifact(config, "index", INDEX, &body)?;
    let complete = series.days().iter().filter(|d| d.composite().is_some()).count();
    print_json(out, json!({ "artifact": path, "days": series.len(), "complete": complete }))
}

/// The corpus index CSV, for commands that read it.
pub fn default_index_path(config: &RunConfig) -> Result<PathBuf> {
    Ok(config.existing_layout()?.artifacts_dir().join(INDEX))
}
