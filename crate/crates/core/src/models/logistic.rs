//! L2-regularized logistic regression, full-batch gradient descent with
//! Armijo backtracking.
//!
//! Objective: `J(w, b) = (1/n) * [ sum_i logloss(y_i, w.x_i + b) + (l2/2) |w|^2 ]`.
//! The intercept is not penalized.

use serde::{Deserialize, Serialize};

use crate::matrix::{dot, Matrix};

pub const MAX_ITERATIONS: usize = 10_000;
pub const GRADIENT_TOLERANCE: f64 = 1e-6;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
}

impl LogisticModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.intercept
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }
}

/// Parameters packed as `[w_0 .. w_{d-1}, b]`.
pub fn objective(params: &[f64], design: &Matrix, labels: &[u8], l2: f64) -> f64 {
    let d = design.n_cols();
    let (w, b) = (&params[..d], params[d]);
    let n = design.n_rows() as f64;
    let loss: f64 = design
        .rows()
        .zip(labels)
        .map(|(x, &y)| {
            let z = dot(w, x) + b;
            softplus(z) - f64::from(y) * z
        })
        .sum();
    (loss + 0.5 * l2 * dot(w, w)) / n
}

pub fn gradient(params: &[f64], design: &Matrix, labels: &[u8], l2: f64) -> Vec<f64> {
    let d = design.n_cols();
    let (w, b) = (&params[..d], params[d]);
    let n = design.n_rows() as f64;
    let mut g = vec![0.0; d + 1];
    for (x, &y) in design.rows().zip(labels) {
        let r = sigmoid(dot(w, x) + b) - f64::from(y);
        for (gj, xj) in g.iter_mut().zip(x) {
            *gj += r * xj;
        }
        g[d] += r;
    }
    for j in 0..d {
        g[j] += l2 * w[j];
    }
    g.iter_mut().for_each(|v| *v /= n);
    g
}

pub fn fit(design: &Matrix, labels: &[u8], l2: f64) -> LogisticModel {
    let d = design.n_cols();
    let mut params = vec![0.0; d + 1];
    let mut f = objective(&params, design, labels, l2);
    let mut step = 1.0;
    let mut iterations = 0;
    let mut candidate = vec![0.0; d + 1];
    while iterations < MAX_ITERATIONS {
        let g = gradient(&params, design, labels, l2);
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax < GRADIENT_TOLERANCE {
            break;
        }
        iterations += 1;
        let gg = dot(&g, &g);
        step *= 2.0;
        let mut accepted = false;
        while step > 1e-12 {
            for ((c, p), gj) in candidate.iter_mut().zip(&params).zip(&g) {
                *c = p - step * gj;
            }
            let fc = objective(&candidate, design, labels, l2);
            if fc <= f - 1e-4 * step * gg {
                std::mem::swap(&mut params, &mut candidate);
                f = fc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    LogisticModel {
        intercept: params[d],
        weights: params[..d].to_vec(),
        iterations,
    }
}
