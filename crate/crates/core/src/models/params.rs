use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::knn::Weighting;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    LogisticRegression,
    Knn,
    RandomForest,
    GradientBoosting,
    SvmLinear,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::LogisticRegression,
        ModelKind::Knn,
        ModelKind::RandomForest,
        ModelKind::GradientBoosting,
        ModelKind::SvmLinear,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::LogisticRegression => "logistic_regression",
            ModelKind::Knn => "knn",
            ModelKind::RandomForest => "random_forest",
            ModelKind::GradientBoosting => "gradient_boosting",
            ModelKind::SvmLinear => "svm_linear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn has_trees(self) -> bool {
        matches!(self, ModelKind::RandomForest | ModelKind::GradientBoosting)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Tree depth limit; serialized as an integer or the string `"none"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MaxDepth(pub Option<usize>);

impl Serialize for MaxDepth {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Some(d) => s.serialize_u64(d as u64),
            None => s.serialize_str("none"),
        }
    }
}

impl<'de> Deserialize<'de> for MaxDepth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Depth(u64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Depth(v) => Ok(MaxDepth(Some(v as usize))),
            Raw::Word(w) if w == "none" => Ok(MaxDepth(None)),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "expected a depth or \"none\", got {w:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubset {
    Sqrt,
    Half,
    All,
}

impl FeatureSubset {
    pub fn resolve(self, width: usize) -> usize {
        let m = match self {
            FeatureSubset::Sqrt => (width as f64).sqrt().floor() as usize,
            FeatureSubset::Half => width / 2,
            FeatureSubset::All => width,
        };
        m.clamp(1, width.max(1))
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub features_per_split: FeatureSubset,
    /// Resample each tree's training set with replacement. Not tuned.
    #[serde(default = "yes")]
    pub bootstrap: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostingParams {
    pub n_stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HyperParams {
    LogisticRegression { l2_strength: f64 },
    Knn { k: usize, weighting: Weighting },
    RandomForest(ForestParams),
    GradientBoosting(BoostingParams),
    SvmLinear { cost_c: f64 },
}

impl HyperParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            HyperParams::LogisticRegression { .. } => ModelKind::LogisticRegression,
            HyperParams::Knn { .. } => ModelKind::Knn,
            HyperParams::RandomForest(_) => ModelKind::RandomForest,
            HyperParams::GradientBoosting(_) => ModelKind::GradientBoosting,
            HyperParams::SvmLinear { .. } => ModelKind::SvmLinear,
        }
    }

    /// Untuned starting values.
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::LogisticRegression => HyperParams::LogisticRegression { l2_strength: 1.0 },
            ModelKind::Knn => HyperParams::Knn {
                k: 15,
                weighting: Weighting::Uniform,
            },
            ModelKind::RandomForest => HyperParams::RandomForest(ForestParams {
                n_trees: 200,
                max_depth: Some(12),
                features_per_split: FeatureSubset::Sqrt,
                bootstrap: true,
            }),
            ModelKind::GradientBoosting => HyperParams::GradientBoosting(BoostingParams {
                n_stages: 200,
                learning_rate: 0.1,
                max_depth: 3,
            }),
            ModelKind::SvmLinear => HyperParams::SvmLinear { cost_c: 1.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidParams(format!("{}: {msg}", self.kind())));
        match *self {
            HyperParams::LogisticRegression { l2_strength } => {
                if !(l2_strength >= 0.0 && l2_strength.is_finite()) {
                    return fail("l2_strength must be finite and >= 0");
                }
            }
            HyperParams::Knn { k, .. } => {
                if k < 1 {
                    return fail("k must be >= 1");
                }
            }
            HyperParams::RandomForest(p) => {
                if p.n_trees < 1 {
                    return fail("n_trees must be >= 1");
                }
                if p.max_depth == Some(0) {
                    return fail("max_depth must be >= 1");
                }
            }
            HyperParams::GradientBoosting(p) => {
                if !(p.learning_rate > 0.0 && p.learning_rate.is_finite()) {
                    return fail("learning_rate must be > 0");
                }
                if p.max_depth < 1 {
                    return fail("max_depth must be >= 1");
                }
            }
            HyperParams::SvmLinear { cost_c } => {
                if !(cost_c > 0.0 && cost_c.is_finite()) {
                    return fail("cost_c must be > 0");
                }
            }
        }
        Ok(())
    }

    /// `(name, value)` pairs for reports.
    pub fn describe(&self) -> Vec<(&'static str, String)> {
        match self {
            HyperParams::LogisticRegression { l2_strength } => vec![("l2_strength", l2_strength.to_string())],
            HyperParams::Knn { k, weighting } => vec![
                ("k", k.to_string()),
                ("weighting", weighting.as_str().to_string()),
            ],
            HyperParams::RandomForest(p) => vec![
                ("n_trees", p.n_trees.to_string()),
                ("max_depth", p.max_depth.map_or("none".into(), |d| d.to_string())),
                ("features_per_split", format!("{:?}", p.features_per_split).to_lowercase()),
            ],
            HyperParams::GradientBoosting(p) => vec![
                ("n_stages", p.n_stages.to_string()),
                ("learning_rate", p.learning_rate.to_string()),
                ("max_depth", p.max_depth.to_string()),
            ],
            HyperParams::SvmLinear { cost_c } => vec![("cost_c", cost_c.to_string())],
        }
    }
}

impl fmt::Display for HyperParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.describe().into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}({})", self.kind(), parts.join(", "))
    }
}
