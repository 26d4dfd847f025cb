//! `report`: gathers existing artifacts into one Markdown document. Nothing
//! is recomputed; every input file is listed with its SHA-256.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use sha2::{Digest, Sha256};

use crate::config::{sidecar_path, write_artifact, RunConfig};
use crate::error::{CliError, Result};

pub const REPORT: &str = "report.md";

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Also copy the report here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub struct Entry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
    pub content: Vec<u8>,
}

/// Artifacts in name order, excluding the report itself.
pub fn collect(config: &RunConfig) -> Result<Vec<Entry>> {
    let dir = config.existing_layout()?.artifacts_dir();
    let own_sidecar = sidecar_path(&dir.join(REPORT));
    let mut entries = Vec::new();
    let listing = fs::read_dir(&dir).map_err(|_| CliError::Report(format!("no artifacts in {}", dir.display())))?;
    for item in listing {
        let path = item.map_err(CliError::io(&dir))?.path();
        if !path.is_file() || path.file_name() == Some(REPORT.as_ref()) || path == own_sidecar {
            continue;
        }
        let content = fs::read(&path).map_err(CliError::io(&path))?;
        entries.push(Entry {
            name: path.file_name().unwrap_or_default().to_string_lossy().into_owned(),
            bytes: content.len(),
            sha256: format!("{:x}", Sha256::digest(&content)),
            content,
        });
    }
    if entries.is_empty() {
        return Err(CliError::Report(format!("no artifacts in {}", dir.display())));
    }
    entries.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(entries)
}

pub fn render(entries: &[Entry]) -> String {
    let mut md = String::from("# Well-being index report\n\n");
    for e in entries.iter().filter(|e| e.name.ends_with(".txt")) {
        md.push_str(&format!("## {}\n\n```\n", e.name.trim_end_matches(".txt")));
        let text = String::from_utf8_lossy(&e.content);
        md.push_str(text.trim_end());
        md.push_str("\n```\n\n");
    }
    md.push_str("## Artifacts\n\n| file | bytes | sha256 |\n|---|---:|---|\n");
    for e in entries {
        md.push_str(&format!("| {} | {} | `{}` |\n", e.name, e.bytes, e.sha256));
    }
    md
}

pub fn report(config: &RunConfig, args: &ReportArgs, out: &mut dyn Write) -> Result<()> {
    let entries = collect(config)?;
    let md = render(&entries);
    let path = write_artifact(config, "report", REPORT, md.as_bytes())?;
    if let Some(extra) = &args.output {
        fs::write(extra, &md).map_err(CliError::io(extra))?;
    }
    writeln!(out, "{}", path.display()).map_err(CliError::io("<stdout>"))
}
