//! Platt scaling: `p = sigmoid(a * margin + b)`, fitted by Newton's method
//! with backtracking on the prior-smoothed targets of Lin, Lin & Weng.

use serde::{Deserialize, Serialize};

use super::logistic::sigmoid;
use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 100;
const MIN_STEP: f64 = 1e-10;
const HESSIAN_RIDGE: f64 = 1e-12;
const GRADIENT_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattCalibrator {
    pub a: f64,
    pub b: f64,
}

impl PlattCalibrator {
    pub fn logit(&self, margin: f64) -> f64 {
        self.a * margin + self.b
    }

    pub fn probability(&self, margin: f64) -> f64 {
        sigmoid(self.logit(margin))
    }
}

/// Cross-entropy against smoothed targets at logit `a*m + b`.
fn objective(margins: &[f64], targets: &[f64], a: f64, b: f64) -> f64 {
    margins
        .iter()
        .zip(targets)
        .map(|(&m, &t)| {
            let z = a * m + b;
            // -(t log s(z) + (1-t) log(1 - s(z))) = softplus(z) - t z
            let sp = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            sp - t * z
        })
        .sum()
}

pub fn fit_platt_calibrator(margins: &[f64], labels: &[u8]) -> Result<PlattCalibrator> {
    if margins.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: margins.len(),
            right: labels.len(),
        });
    }
    let positives = labels.iter().filter(|&&y| y == 1).count() as f64;
    let negatives = labels.len() as f64 - positives;
    if positives == 0.0 || negatives == 0.0 {
        return Err(Error::DegenerateTraining {
            kind: "platt calibration".into(),
        });
    }
    let hi = (positives + 1.0) / (positives + 2.0);
    let lo = 1.0 / (negatives + 2.0);
    let targets: Vec<f64> = labels.iter().map(|&y| if y == 1 { hi } else { lo }).collect();

    let mut a = 0.0;
    let mut b = ((positives + 1.0) / (negatives + 1.0)).ln();
    let mut f = objective(margins, &targets, a, b);
    let mut gradient_norm = f64::INFINITY;

    for _ in 0..MAX_ITERATIONS {
        let (mut h11, mut h22, mut h21) = (HESSIAN_RIDGE, HESSIAN_RIDGE, 0.0);
        let (mut g1, mut g2) = (0.0, 0.0);
        for (&m, &t) in margins.iter().zip(&targets) {
            let p = sigmoid(a * m + b);
            let d2 = p * (1.0 - p);
            h11 += m * m * d2;
            h22 += d2;
            h21 += m * d2;
            let d1 = p - t;
            g1 += m * d1;
            g2 += d1;
        }
        gradient_norm = g1.abs().max(g2.abs());
        if gradient_norm < GRADIENT_TOLERANCE {
            return Ok(PlattCalibrator { a, b });
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= MIN_STEP {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(margins, &targets, na, nb);
            if nf < f + 1e-4 * step * gd {
                a = na;
                b = nb;
                f = nf;
                break;
            }
            step /= 2.0;
        }
        if step < MIN_STEP {
            // no representable descent left: the iterate is optimal to
            // working precision
            return Ok(PlattCalibrator { a, b });
        }
    }
    Err(Error::Calibration {
        iterations: MAX_ITERATIONS,
        gradient: gradient_norm,
    })
}
