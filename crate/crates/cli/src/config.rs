//! Run configuration shared by every subcommand and the artifact writer
//! that records it next to each output.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use swb_core::corpus::{CorpusLayout, StoreError};
use swb_core::index::REPORT_SCALE;

use crate::error::{CliError, Result};

/// Settings that determine an artifact's content. Worker counts and ports
/// are deliberately absent: they never change results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data_dir: Option<PathBuf>,
    pub corpus: Option<String>,
    pub seed: u64,
    /// `None` selects λ per dimension from the default grid.
    pub lambda: Option<f64>,
    pub alpha: f64,
    pub max_features: usize,
    pub bootstrap: usize,
    pub bandwidth: f64,
    pub report_scale: f64,
}

impl RunConfig {
    pub fn new(data_dir: Option<PathBuf>, corpus: Option<String>) -> Self {
        RunConfig {
            data_dir,
            corpus,
            seed: 0,
            lambda: None,
            alpha: 0.5,
            max_features: 2000,
            bootstrap: 0,
            bandwidth: swb_core::index::DEFAULT_BANDWIDTH_DAYS,
            report_scale: REPORT_SCALE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(dir) = &self.data_dir {
            if !dir.is_dir() {
                return Err(CliError::Config(format!("data directory {} does not exist", dir.display())));
            }
        }
        if let Some(l) = self.lambda {
            if !(l.is_finite() && l >= 0.0) {
                return Err(CliError::Config(format!("--lambda must be a finite value ≥ 0, got {l}")));
            }
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(CliError::Config(format!("--alpha must be ≥ 0, got {}", self.alpha)));
        }
        if self.max_features == 0 {
            return Err(CliError::Config("--max-features must be positive".into()));
        }
        if self.bootstrap == 1 {
            return Err(CliError::Config("--bootstrap needs at least 2 replicates (0 disables it)".into()));
        }
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(CliError::Config(format!("--bandwidth must be positive, got {}", self.bandwidth)));
        }
        Ok(())
    }

    /// The corpus store named by `--data-dir` and `--corpus`.
    pub fn layout(&self) -> Result<CorpusLayout> {
        match (&self.data_dir, &self.corpus) {
            (Some(dir), Some(id)) => Ok(CorpusLayout::new(dir, id)),
            (None, _) => Err(CliError::Config("--data-dir (or SWB_DATA_DIR) is required".into())),
            (_, None) => Err(CliError::Config("--corpus is required".into())),
        }
    }

    /// Like [`Self::layout`], but the corpus must already exist.
    pub fn existing_layout(&self) -> Result<CorpusLayout> {
        let layout = self.layout()?;
        if !layout.exists() {
            return Err(StoreError::Missing(layout.id().to_string()).into());
        }
        Ok(layout)
    }

    /// Whether a corpus context was given; table commands then write
    /// artifacts as well as printing.
    pub fn has_corpus(&self) -> bool {
        self.data_dir.is_some() && self.corpus.is_some()
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    artifact: &'a str,
    command: &'a str,
    config: &'a RunConfig,
}

pub fn sidecar_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".run.json");
    artifact.with_file_name(name)
}

/// Writes `artifacts/<name>` of the configured corpus together with its
/// `<name>.run.json` sidecar.
pub fn write_artifact(config: &RunConfig, command: &str, name: &str, body: &[u8]) -> Result<PathBuf> {
    let dir = config.existing_layout()?.artifacts_dir();
    fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    let path = dir.join(name);
    fs::write(&path, body).map_err(CliError::io(&path))?;
    let sidecar = Sidecar {
        artifact: name,
        command,
        config,
    };
    let side = sidecar_path(&path);
    let text = serde_json::to_string_pretty(&sidecar).expect("run config serializes") + "\n";
    fs::write(&side, text).map_err(CliError::io(&side))?;
    Ok(path)
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    if !path.exists() {
        return Err(CliError::Config(format!("{} does not exist", path.display())));
    }
    fs::read(path).map_err(CliError::io(path))
}

pub fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read_file(path)?).map_err(|_| CliError::Config(format!("{} is not UTF-8", path.display())))
}
