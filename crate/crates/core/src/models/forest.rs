//! Random forest of Gini trees with per-tree derived seeds.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::ForestParams;
use super::tree::{grow, Gini, GrowOptions, Tree};
use crate::matrix::Matrix;
use crate::seed::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<Tree>,
    /// Mean per-tree normalized impurity decrease, per design column.
    pub importances: Vec<f64>,
}

impl RandomForest {
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

pub(crate) fn normalized(gains: &[f64]) -> Option<Vec<f64>> {
    let total: f64 = gains.iter().sum();
    (total > 0.0).then(|| gains.iter().map(|g| g / total).collect())
}

/// Averages per-tree normalized gains, then renormalizes to sum to one.
pub(crate) fn mean_importance(per_tree: &[Vec<f64>], width: usize) -> Vec<f64> {
    let mut acc = vec![0.0; width];
    for gains in per_tree {
        if let Some(norm) = normalized(gains) {
            acc.iter_mut().zip(norm).for_each(|(a, g)| *a += g);
        }
    }
    normalized(&acc).unwrap_or(acc)
}

pub fn fit(design: &Matrix, labels: &[u8], params: &ForestParams, seed: u64) -> RandomForest {
    let n = design.n_rows();
    let width = design.n_cols();
    let features_per_split = params.features_per_split.resolve(width);
    let options = GrowOptions {
        max_depth: params.max_depth,
        features_per_split: Some(features_per_split),
    };
    let grown: Vec<_> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(seed, "tree", t as u64));
            let mut weights = vec![0.0; n];
            if params.bootstrap {
                for _ in 0..n {
                    weights[rng.random_range(0..n)] += 1.0;
                }
            } else {
                weights.fill(1.0);
            }
            let samples: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
            let criterion = Gini {
                labels,
                weights: &weights,
            };
            grow(design, samples, &criterion, &options, Some(&mut rng))
        })
        .collect();
    let per_tree: Vec<Vec<f64>> = grown.iter().map(|g| g.gains.clone()).collect();
    RandomForest {
        importances: mean_importance(&per_tree, width),
        trees: grown.into_iter().map(|g| g.tree).collect(),
    }
}
