//! Gradient boosting on binomial log-loss.
//!
//! Each stage fits a squared-error tree to the residuals `y - p` and sets
//! leaf values by a Newton step `sum(r) / sum(p(1-p))`, shrunk by the
//! learning rate. If a stage would raise the training loss its leaves are
//! halved until it does not; a stage that cannot reduce the loss ends
//! training early.

use serde::{Deserialize, Serialize};

use super::forest::mean_importance;
use super::logistic::sigmoid;
use super::params::BoostingParams;
use super::tree::{grow, GrowOptions, NewtonResidual, Tree};
use crate::matrix::Matrix;

const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    pub init_score: f64,
    pub trees: Vec<Tree>,
    pub importances: Vec<f64>,
    /// Mean training log-loss after the initial score and after each stage.
    pub train_loss: Vec<f64>,
}

pub fn log_loss(scores: &[f64], labels: &[u8]) -> f64 {
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&f, &y)| {
            let sp = if f > 0.0 { f + (-f).exp().ln_1p() } else { f.exp().ln_1p() };
            sp - f64::from(y) * f
        })
        .sum();
    total / scores.len() as f64
}

impl GradientBoosting {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.trees.iter().fold(self.init_score, |f, t| f + t.predict(x))
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }

    /// Log-loss on `design` after the initial score and after each stage.
    pub fn staged_log_loss(&self, design: &Matrix, labels: &[u8]) -> Vec<f64> {
        let mut scores = vec![self.init_score; design.n_rows()];
        let mut out = vec![log_loss(&scores, labels)];
        for tree in &self.trees {
            for (f, x) in scores.iter_mut().zip(design.rows()) {
                *f += tree.predict(x);
            }
            out.push(log_loss(&scores, labels));
        }
        out
    }
}

/// Caller guarantees both classes are present.
pub fn fit(design: &Matrix, labels: &[u8], params: &BoostingParams) -> GradientBoosting {
    let n = design.n_rows();
    let prevalence = labels.iter().map(|&y| f64::from(y)).sum::<f64>() / n as f64;
    let init_score = (prevalence / (1.0 - prevalence)).ln();
    let mut scores = vec![init_score; n];
    let mut loss = log_loss(&scores, labels);
    let mut train_loss = vec![loss];
    let mut trees = Vec::with_capacity(params.n_stages);
    let mut per_tree_gains = Vec::with_capacity(params.n_stages);
    let options = GrowOptions {
        max_depth: Some(params.max_depth),
        features_per_split: None,
    };
    let mut residuals = vec![0.0; n];
    let mut hessians = vec![0.0; n];
    let mut candidate = vec![0.0; n];

    for _ in 0..params.n_stages {
        for i in 0..n {
            let p = sigmoid(scores[i]);
            residuals[i] = f64::from(labels[i]) - p;
            hessians[i] = p * (1.0 - p);
        }
        let criterion = NewtonResidual {
            residuals: &residuals,
            hessians: &hessians,
        };
        let grown = grow(design, (0..n).collect(), &criterion, &options, None);
        let mut tree = grown.tree;
        tree.scale_leaves(params.learning_rate);
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            for ((c, f), x) in candidate.iter_mut().zip(&scores).zip(design.rows()) {
                *c = f + tree.predict(x);
            }
            let new_loss = log_loss(&candidate, labels);
            if new_loss <= loss {
                accepted = Some(new_loss);
                break;
            }
            tree.scale_leaves(0.5);
        }
        let Some(new_loss) = accepted else { break };
        std::mem::swap(&mut scores, &mut candidate);
        loss = new_loss;
        train_loss.push(loss);
        trees.push(tree);
        per_tree_gains.push(grown.gains);
    }

    GradientBoosting {
        init_score,
        importances: mean_importance(&per_tree_gains, design.n_cols()),
        trees,
        train_loss,
    }
}
