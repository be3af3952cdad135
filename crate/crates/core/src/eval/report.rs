use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::metrics::{classification_metrics, ClassificationMetrics};
use super::roc::auc;
use super::screening::ScreeningSummary;
use super::threshold::ThresholdChoice;
use crate::ensemble::{classify, cutoff};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub decision_boundary: f64,
    pub cutoff: f64,
    pub metrics: ClassificationMetrics,
}

impl OperatingPoint {
    pub fn at(scores: &[f64], labels: &[u8], t: f64) -> Result<Self> {
        let predictions: Vec<u8> = scores.iter().map(|&p| u8::from(classify(p, t))).collect();
        Ok(Self {
            decision_boundary: t,
            cutoff: cutoff(t),
            metrics: classification_metrics(&predictions, labels)?,
        })
    }
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub auc: f64,
    /// Metrics with the symmetric boundary T = 0.5.
    pub standard: OperatingPoint,
    /// Metrics with the boundary chosen on the training partition.
    pub chosen: OperatingPoint,
}

impl ModelReport {
    pub fn evaluate(scores: &[f64], labels: &[u8], chosen_t: f64) -> Result<Self> {
        Ok(Self {
            auc: auc(scores, labels)?,
            standard: OperatingPoint::at(scores, labels, 0.5)?,
            chosen: OperatingPoint::at(scores, labels, chosen_t)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub test_size: usize,
    /// Keyed by model name; the ensemble appears as "ensemble".
    pub models: BTreeMap<String, ModelReport>,
    pub threshold: ThresholdChoice,
    pub screening: ScreeningSummary,
}

impl MetricsReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn table_csv(&self) -> String {
        let mut out = String::from(
            "model,auc,f1_weighted,recall_weighted,precision_weighted,recall_diabetic,recall_non_diabetic\n",
        );
        for (name, r) in &self.models {
            let m = &r.standard.metrics;
            out.push_str(&format!(
                "{name},{},{},{},{},{},{}\n",
                r.auc, m.weighted.f1, m.weighted.recall, m.weighted.precision, m.diabetic.recall, m.non_diabetic.recall
            ));
        }
        out
    }
}
