use serde::{Deserialize, Serialize};

use crate::ensemble::{classify, cutoff};
use crate::error::{Error, Result};

/// Grid of decision boundaries is T = i / T_GRID_STEPS for i in 0..=T_GRID_STEPS.
pub const T_GRID_STEPS: usize = 100;

pub fn threshold_grid() -> Vec<f64> {
    (0..=T_GRID_STEPS).map(|i| i as f64 / T_GRID_STEPS as f64).collect()
}

/// (diabetic recall, non-diabetic recall) with boundary `t`.
pub fn recall_at(scores: &[f64], labels: &[u8], t: f64) -> Result<(f64, f64)> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    let (mut pos, mut neg, mut hit_pos, mut hit_neg) = (0u64, 0u64, 0u64, 0u64);
    for (&p, &y) in scores.iter().zip(labels) {
        let flagged = classify(p, t);
        if y == 1 {
            pos += 1;
            hit_pos += u64::from(flagged);
        } else {
            neg += 1;
            hit_neg += u64::from(!flagged);
        }
    }
    if pos == 0 {
        return Err(Error::UndefinedClass { class: 1 });
    }
    if neg == 0 {
        return Err(Error::UndefinedClass { class: 0 });
    }
    Ok((hit_pos as f64 / pos as f64, hit_neg as f64 / neg as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallCurves {
    pub boundaries: Vec<f64>,
    pub diabetic: Vec<f64>,
    pub non_diabetic: Vec<f64>,
}

impl RecallCurves {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("T,cutoff,diabetic_recall,non_diabetic_recall\n");
        for i in 0..self.boundaries.len() {
            let t = self.boundaries[i];
            out.push_str(&format!("{t},{},{},{}\n", cutoff(t), self.diabetic[i], self.non_diabetic[i]));
        }
        out
    }
}

/// Per-class recall at every boundary on the 0.01 grid.
pub fn recall_vs_threshold(scores: &[f64], labels: &[u8]) -> Result<RecallCurves> {
    let boundaries = threshold_grid();
    let mut diabetic = Vec::with_capacity(boundaries.len());
    let mut non_diabetic = Vec::with_capacity(boundaries.len());
    for &t in &boundaries {
        let (d, n) = recall_at(scores, labels, t)?;
        diabetic.push(d);
        non_diabetic.push(n);
    }
    Ok(RecallCurves {
        boundaries,
        diabetic,
        non_diabetic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    /// Decision boundary T; diabetic iff p >= 1 - T.
    pub decision_boundary: f64,
    /// The probability cutoff 1 - T actually compared against.
    pub cutoff: f64,
    pub grid_index: usize,
    pub diabetic_recall: f64,
    pub non_diabetic_recall: f64,
}

/// Smallest grid boundary whose diabetic recall reaches `target`.
pub fn choose_threshold(scores: &[f64], labels: &[u8], target: f64) -> Result<ThresholdChoice> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::InvalidArgument(format!("target recall must lie in (0, 1], got {target}")));
    }
    for (i, t) in threshold_grid().into_iter().enumerate() {
        let (d, n) = recall_at(scores, labels, t)?;
        if d >= target {
            return Ok(ThresholdChoice {
                decision_boundary: t,
                cutoff: cutoff(t),
                grid_index: i,
                diabetic_recall: d,
                non_diabetic_recall: n,
            });
        }
    }
    unreachable!("T = 1 flags every sample")
}
