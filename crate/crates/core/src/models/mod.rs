//! Five classifiers behind one probability-of-diabetic contract.

pub mod boosting;
pub mod forest;
pub mod knn;
pub mod logistic;
pub mod params;
pub mod platt;
pub mod svm;
pub mod tree;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::encode::ColumnCatalog;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use knn::Weighting;
pub use params::{BoostingParams, FeatureSubset, ForestParams, HyperParams, MaxDepth, ModelKind};
pub use platt::{fit_platt_calibrator, PlattCalibrator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fitted {
    LogisticRegression(logistic::LogisticModel),
    Knn(knn::KnnModel),
    RandomForest(forest::RandomForest),
    GradientBoosting(boosting::GradientBoosting),
    SvmLinear(svm::LinearSvm),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub params: HyperParams,
    pub catalog: ColumnCatalog,
    pub seed: u64,
    pub n_train: usize,
    pub fitted: Fitted,
}

pub const ARTIFACT_FORMAT: &str = "onset-model";
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Artifact<T> {
    format: String,
    version: u32,
    #[serde(flatten)]
    body: T,
}

pub(crate) fn check_labels(design: &Matrix, labels: &[u8]) -> Result<(usize, usize)> {
    if design.n_rows() != labels.len() {
        return Err(Error::LengthMismatch {
            left: design.n_rows(),
            right: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&y| y > 1) {
        return Err(Error::InvalidArgument(format!("labels must be 0/1, found {bad}")));
    }
    let positives = labels.iter().filter(|&&y| y == 1).count();
    Ok((positives, labels.len() - positives))
}

/// Trains one classifier. A fixed seed yields an identical model.
pub fn train(
    params: &HyperParams,
    design: &Matrix,
    labels: &[u8],
    catalog: &ColumnCatalog,
    seed: u64,
) -> Result<TrainedModel> {
    params.validate()?;
    if design.n_cols() != catalog.width() {
        return Err(Error::Shape {
            expected: catalog.width(),
            got: design.n_cols(),
        });
    }
    let (positives, negatives) = check_labels(design, labels)?;
    if design.n_rows() == 0 {
        return Err(Error::InvalidArgument("cannot train on zero samples".into()));
    }
    let kind = params.kind();
    if (positives == 0 || negatives == 0) && kind != ModelKind::Knn {
        return Err(Error::DegenerateTraining { kind: kind.to_string() });
    }
    if let HyperParams::Knn { k, .. } = *params {
        if k > design.n_rows() {
            return Err(Error::InvalidParams(format!(
                "k = {k} exceeds the {} training samples",
                design.n_rows()
            )));
        }
    }
    let fitted = match *params {
        HyperParams::LogisticRegression { l2_strength } => {
            Fitted::LogisticRegression(logistic::fit(design, labels, l2_strength))
        }
        HyperParams::Knn { k, weighting } => {
            Fitted::Knn(knn::KnnModel::new(design.clone(), labels.to_vec(), k, weighting))
        }
        HyperParams::RandomForest(p) => Fitted::RandomForest(forest::fit(design, labels, &p, seed)),
        HyperParams::GradientBoosting(p) => Fitted::GradientBoosting(boosting::fit(design, labels, &p)),
        HyperParams::SvmLinear { cost_c } => Fitted::SvmLinear(svm::fit(design, labels, cost_c, seed)?),
    };
    Ok(TrainedModel {
        params: *params,
        catalog: catalog.clone(),
        seed,
        n_train: design.n_rows(),
        fitted,
    })
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.params.kind()
    }

    pub fn width(&self) -> usize {
        self.catalog.width()
    }

    /// Probability of the diabetic class.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.width() {
            return Err(Error::Shape {
                expected: self.width(),
                got: x.len(),
            });
        }
        let p = match &self.fitted {
            Fitted::LogisticRegression(m) => m.predict_proba(x),
            Fitted::Knn(m) => m.predict_proba(x),
            Fitted::RandomForest(m) => m.predict_proba(x),
            Fitted::GradientBoosting(m) => m.predict_proba(x),
            Fitted::SvmLinear(m) => m.predict_proba(x),
        };
        Ok(p.clamp(0.0, 1.0))
    }

    pub fn predict_proba_batch(&self, design: &Matrix) -> Result<Vec<f64>> {
        if design.n_cols() != self.width() {
            return Err(Error::Shape {
                expected: self.width(),
                got: design.n_cols(),
            });
        }
        design.rows().map(|x| self.predict_proba(x)).collect()
    }

    /// Mean impurity decrease aggregated to schema features, summing to one.
    pub fn feature_importances(&self) -> Result<Vec<(String, f64)>> {
        let per_column = match &self.fitted {
            Fitted::RandomForest(m) => &m.importances,
            Fitted::GradientBoosting(m) => &m.importances,
            _ => {
                return Err(Error::Unsupported {
                    operation: "feature_importances",
                    kind: self.kind().to_string(),
                })
            }
        };
        let per_feature = self.catalog.aggregate(per_column);
        Ok(self
            .catalog
            .feature_names
            .iter()
            .cloned()
            .zip(per_feature)
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&Artifact {
            format: ARTIFACT_FORMAT.into(),
            version: ARTIFACT_VERSION,
            body: self,
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let artifact: Artifact<TrainedModel> = serde_json::from_str(text)?;
        check_header(&artifact.format, artifact.version, ARTIFACT_FORMAT)?;
        Ok(artifact.body)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

pub(crate) fn check_header(format: &str, version: u32, expected: &str) -> Result<()> {
    if format != expected {
        return Err(Error::Artifact(format!("expected format {expected}, found {format}")));
    }
    if version != ARTIFACT_VERSION {
        return Err(Error::Artifact(format!(
            "unsupported {expected} version {version} (this build reads {ARTIFACT_VERSION})"
        )));
    }
    Ok(())
}

pub(crate) fn to_artifact_json<T: Serialize>(format: &str, body: &T) -> Result<String> {
    Ok(serde_json::to_string(&Artifact {
        format: format.into(),
        version: ARTIFACT_VERSION,
        body,
    })?)
}

pub(crate) fn from_artifact_json<T: for<'de> Deserialize<'de>>(format: &str, text: &str) -> Result<T> {
    let artifact: Artifact<T> = serde_json::from_str(text)?;
    check_header(&artifact.format, artifact.version, format)?;
    Ok(artifact.body)
}
