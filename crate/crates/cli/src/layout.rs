use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use onset_core::models::ModelKind;

/// Fixed output tree under one run directory:
///
/// ```text
/// cohort/       cohort.csv, exclusions.tsv, split.json
/// models/       <kind>.json, ensemble.json
/// cv/           <kind>.json, <kind>.csv, threshold.json
/// eval/         metrics.json, table.csv, curves, plots, predictions
/// bootstrap/    band.csv, aucs.csv, summary.json, band.svg
/// config-echo/  <subcommand>.toml
/// ```
#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dir(&self, name: &str) -> Result<PathBuf> {
        let dir = self.root.join(name);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }

    pub fn cohort(&self) -> PathBuf {
        self.root.join("cohort/cohort.csv")
    }

    pub fn exclusions(&self) -> PathBuf {
        self.root.join("cohort/exclusions.tsv")
    }

    pub fn split(&self) -> PathBuf {
        self.root.join("cohort/split.json")
    }

    pub fn model(&self, kind: ModelKind) -> PathBuf {
        self.root.join(format!("models/{kind}.json"))
    }

    pub fn ensemble(&self) -> PathBuf {
        self.root.join("models/ensemble.json")
    }

    pub fn cv_report(&self, kind: ModelKind) -> PathBuf {
        self.root.join(format!("cv/{kind}.json"))
    }

    pub fn cv_table(&self, kind: ModelKind) -> PathBuf {
        self.root.join(format!("cv/{kind}.csv"))
    }

    pub fn threshold(&self) -> PathBuf {
        self.root.join("cv/threshold.json")
    }

    pub fn eval(&self, file: &str) -> PathBuf {
        self.root.join("eval").join(file)
    }

    pub fn bootstrap(&self, file: &str) -> PathBuf {
        self.root.join("bootstrap").join(file)
    }

    pub fn echo(&self, command: &str) -> PathBuf {
        self.root.join(format!("config-echo/{command}.toml"))
    }
}

/// Fails with a message naming the missing artifact and the step that
/// produces it.
pub fn require(path: &Path, produced_by: &str) -> Result<()> {
    if !path.exists() {
        anyhow::bail!("missing artifact {} (run `onset {produced_by}` first)", path.display());
    }
    Ok(())
}

pub fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}
