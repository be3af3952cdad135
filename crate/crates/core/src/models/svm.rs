//! Linear SVM: hinge loss with L2 penalty, trained by Pegasos-style
//! stochastic subgradient descent over a fixed number of seeded epochs.
//! The intercept is an augmented constant feature and is penalized along
//! with the weights. Probabilities come from a Platt calibrator fitted on
//! out-of-fold margins.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::platt::{fit_platt_calibrator, PlattCalibrator};
use crate::error::Result;
use crate::matrix::{dot, Matrix};
use crate::seed::{derive_seed, rng_from_seed};
use crate::tuning::kfold_indices;

pub const EPOCHS: usize = 40;
pub const CALIBRATION_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub calibrator: PlattCalibrator,
}

impl LinearSvm {
    pub fn margin(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.intercept
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        self.calibrator.probability(self.margin(x))
    }
}

/// Returns `(weights, intercept)` of the averaged iterate.
pub fn fit_margins(design: &Matrix, labels: &[u8], cost_c: f64, seed: u64) -> (Vec<f64>, f64) {
    let n = design.n_rows();
    let d = design.n_cols();
    let lambda = 1.0 / (cost_c * n as f64);
    let radius = 1.0 / lambda.sqrt();
    let mut rng = rng_from_seed(seed);
    // last slot is the intercept
    let mut w = vec![0.0; d + 1];
    let mut avg = vec![0.0; d + 1];
    let mut averaged = 0usize;
    let total_steps = EPOCHS * n;
    let average_from = total_steps / 2;
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0usize;
    for _ in 0..EPOCHS {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let x = design.row(i);
            let y = if labels[i] == 1 { 1.0 } else { -1.0 };
            let score = dot(&w[..d], x) + w[d];
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if y * score < 1.0 {
                for (wj, xj) in w[..d].iter_mut().zip(x) {
                    *wj += eta * y * xj;
                }
                w[d] += eta * y;
            }
            let norm = dot(&w, &w).sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
            }
            if t > average_from {
                averaged += 1;
                let k = averaged as f64;
                for (a, v) in avg.iter_mut().zip(&w) {
                    *a += (v - *a) / k;
                }
            }
        }
    }
    let intercept = avg[d];
    avg.truncate(d);
    (avg, intercept)
}

/// Caller guarantees both classes are present.
pub fn fit(design: &Matrix, labels: &[u8], cost_c: f64, seed: u64) -> Result<LinearSvm> {
    let (weights, intercept) = fit_margins(design, labels, cost_c, derive_seed(seed, "svm", 0));
    let positives = labels.iter().filter(|&&y| y == 1).count();
    let smallest_class = positives.min(labels.len() - positives);
    let folds = CALIBRATION_FOLDS.min(smallest_class);

    let margins = if folds >= 2 {
        let fold_sets = kfold_indices(labels, folds, derive_seed(seed, "platt-folds", 0))?;
        let mut margins = vec![0.0; labels.len()];
        for (f, held_out) in fold_sets.iter().enumerate() {
            let mut keep = vec![true; labels.len()];
            held_out.iter().for_each(|&i| keep[i] = false);
            let train_idx: Vec<usize> = (0..labels.len()).filter(|&i| keep[i]).collect();
            let sub_labels: Vec<u8> = train_idx.iter().map(|&i| labels[i]).collect();
            let (w, b) = fit_margins(
                &design.select_rows(&train_idx),
                &sub_labels,
                cost_c,
                derive_seed(seed, "svm-fold", f as u64),
            );
            for &i in held_out {
                margins[i] = dot(&w, design.row(i)) + b;
            }
        }
        margins
    } else {
        design.rows().map(|x| dot(&weights, x) + intercept).collect()
    };
    let calibrator = fit_platt_calibrator(&margins, labels)?;
    Ok(LinearSvm {
        weights,
        intercept,
        calibrator,
    })
}
