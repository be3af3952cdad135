//! Train-fitted mean/mode imputation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::cohort::Cohort;
use super::schema::FeatureSchema;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationPlan {
    /// Fill value per schema feature, in schema order.
    pub fills: Vec<f64>,
    /// Number of present training values each fill was computed from.
    pub fitted_on: Vec<usize>,
}

/// Most frequent value; ties go to the smallest value.
fn mode(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v as i64).or_default() += 1;
    }
    let mut best: Option<(i64, usize)> = None;
    for (code, count) in counts {
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((code, count));
        }
    }
    best.map(|(code, _)| code as f64)
}

pub fn fit_imputer(train: &Cohort, schema: &FeatureSchema) -> Result<ImputationPlan> {
    let mut fills = Vec::with_capacity(schema.len());
    let mut fitted_on = Vec::with_capacity(schema.len());
    for (j, def) in schema.entries.iter().enumerate() {
        let present = || train.features.iter().filter_map(move |row| row[j]);
        let count = present().count();
        if count == 0 {
            return Err(Error::UnimputableFeature {
                name: def.name.clone(),
                code: def.survey_code.clone(),
            });
        }
        let fill = if def.kind.is_categorical() {
            mode(present()).expect("nonempty")
        } else {
            present().sum::<f64>() / count as f64
        };
        fills.push(fill);
        fitted_on.push(count);
    }
    Ok(ImputationPlan { fills, fitted_on })
}

impl ImputationPlan {
    pub fn fill_row(&self, row: &[Option<f64>]) -> Vec<f64> {
        row.iter()
            .zip(&self.fills)
            .map(|(v, &fill)| v.unwrap_or(fill))
            .collect()
    }
}

/// Returns a cohort with every cell present.
pub fn apply_imputer(plan: &ImputationPlan, cohort: &Cohort) -> Cohort {
    Cohort {
        ids: cohort.ids.clone(),
        features: cohort
            .features
            .iter()
            .map(|row| plan.fill_row(row).into_iter().map(Some).collect())
            .collect(),
        labels: cohort.labels.clone(),
        label_sources: cohort.label_sources.clone(),
    }
}
