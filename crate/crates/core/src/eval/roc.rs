use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// (false positive rate, true positive rate), from threshold +inf down.
    pub points: Vec<(f64, f64)>,
    /// Score at which each point is reached; `None` for the origin.
    pub thresholds: Vec<Option<f64>>,
    pub auc: f64,
}

fn class_counts(scores: &[f64], labels: &[u8]) -> Result<(u64, u64)> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("scores contain NaN".into()));
    }
    let positives = labels.iter().filter(|&&y| y == 1).count() as u64;
    let negatives = labels.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedRoc);
    }
    Ok((positives, negatives))
}

/// Cumulative (fp, tp) counts per distinct score, descending.
fn vertices(scores: &[f64], labels: &[u8]) -> Vec<(u64, u64, f64)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("NaN rejected"));
    let mut out = Vec::new();
    let (mut fp, mut tp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        out.push((fp, tp, s));
    }
    out
}

/// Twice the trapezoid area in count units: sum of (dfp * (tp + tp_prev)).
/// Dividing by 2PN gives the AUC; the same integer equals
/// 2 * #(pos above neg) + #(ties), so both definitions agree exactly.
fn doubled_area(vertices: &[(u64, u64, f64)]) -> u128 {
    let (mut fp0, mut tp0) = (0u64, 0u64);
    let mut area = 0u128;
    for &(fp, tp, _) in vertices {
        area += u128::from(fp - fp0) * u128::from(tp + tp0);
        fp0 = fp;
        tp0 = tp;
    }
    area
}

pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    let (p, n) = class_counts(scores, labels)?;
    let vs = vertices(scores, labels);
    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![None];
    for &(fp, tp, s) in &vs {
        points.push((fp as f64 / n as f64, tp as f64 / p as f64));
        thresholds.push(Some(s));
    }
    let auc = doubled_area(&vs) as f64 / (2 * u128::from(p) * u128::from(n)) as f64;
    Ok(RocCurve { points, thresholds, auc })
}

/// Area under the ROC curve without materializing the points.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (p, n) = class_counts(scores, labels)?;
    let area = doubled_area(&vertices(scores, labels));
    Ok(area as f64 / (2 * u128::from(p) * u128::from(n)) as f64)
}

impl RocCurve {
    /// True positive rate at `fpr`: the highest vertex when one sits
    /// exactly at `fpr`, otherwise linear between neighbouring vertices.
    pub fn tpr_at(&self, fpr: f64) -> f64 {
        let pts = &self.points;
        let mut best: Option<f64> = None;
        for &(x, y) in pts {
            if x == fpr {
                best = Some(best.map_or(y, |b: f64| b.max(y)));
            }
        }
        if let Some(y) = best {
            return y;
        }
        for w in pts.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if x0 < fpr && fpr < x1 {
                return y0 + (y1 - y0) * (fpr - x0) / (x1 - x0);
            }
        }
        if fpr <= 0.0 {
            0.0
        } else {
            1.0
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("fpr,tpr,threshold\n");
        for (&(x, y), t) in self.points.iter().zip(&self.thresholds) {
            match t {
                Some(t) => out.push_str(&format!("{x},{y},{t}\n")),
                None => out.push_str(&format!("{x},{y},inf\n")),
            }
        }
        out
    }
}
