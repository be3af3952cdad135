use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use onset_core::data::FeatureSchema;
use onset_core::models::ModelKind;
use onset_core::tuning::Grid;
use serde::{Deserialize, Serialize};

/// Settings for one pipeline run, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Raw extract read by `ingest`.
    pub input: Option<PathBuf>,
    pub schema: String,
    pub delimiter: char,
    pub test_fraction: f64,
    pub cv_folds: usize,
    pub n_boot: usize,
    pub recall_target: f64,
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; unset uses every core. Never changes results.
    pub jobs: Option<usize>,
    /// Search grids; model kinds left out use the built-in grid.
    pub grids: Vec<Grid>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            schema: "table1".into(),
            delimiter: ',',
            test_fraction: 0.2,
            cv_folds: 10,
            n_boot: 1000,
            recall_target: 0.75,
            seed: 0,
            out: PathBuf::from("out"),
            jobs: None,
            grids: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Fills in default grids (one per kind, in canonical order) and checks
    /// every field.
    pub fn resolve(mut self) -> Result<Self> {
        let mut grids = Vec::with_capacity(ModelKind::ALL.len());
        for kind in ModelKind::ALL {
            let mut given = self.grids.iter().filter(|g| g.kind() == kind);
            let grid = given.next().cloned().unwrap_or_else(|| Grid::default_for(kind));
            if given.next().is_some() {
                bail!("more than one grid given for {kind}");
            }
            grids.push(grid);
        }
        self.grids = grids;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.schema()?;
        if !self.delimiter.is_ascii() {
            bail!("delimiter must be a single ASCII character");
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            bail!("test_fraction must lie in (0, 1), got {}", self.test_fraction);
        }
        if self.cv_folds < 2 {
            bail!("cv_folds must be at least 2, got {}", self.cv_folds);
        }
        if self.n_boot < 2 {
            bail!("n_boot must be at least 2, got {}", self.n_boot);
        }
        if !(self.recall_target > 0.0 && self.recall_target <= 1.0) {
            bail!("recall_target must lie in (0, 1], got {}", self.recall_target);
        }
        if self.jobs == Some(0) {
            bail!("jobs must be at least 1");
        }
        for grid in &self.grids {
            grid.validate()?;
        }
        Ok(())
    }

    pub fn schema(&self) -> Result<FeatureSchema> {
        match self.schema.as_str() {
            "table1" => Ok(FeatureSchema::table1()),
            other => bail!("unknown schema '{other}' (available: table1)"),
        }
    }

    pub fn grid(&self, kind: ModelKind) -> Grid {
        self.grids
            .iter()
            .find(|g| g.kind() == kind)
            .cloned()
            .unwrap_or_else(|| Grid::default_for(kind))
    }
}
