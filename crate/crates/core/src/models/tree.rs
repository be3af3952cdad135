//! CART trees shared by the forest and the booster.
//!
//! Splits are found by an exhaustive scan over midpoints between sorted
//! unique values. A candidate replaces the incumbent only on strictly larger
//! gain, so ties resolve to the lowest column index, then the lowest
//! threshold. Samples with `x <= threshold` go left.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::seed::StageRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn constant(value: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn scale_leaves(&mut self, factor: f64) {
        for node in &mut self.nodes {
            if let Node::Leaf { value } = node {
                *value *= factor;
            }
        }
    }
}

/// Node-level sufficient statistics and impurity for one split criterion.
pub(crate) trait Criterion {
    /// Adds sample `i` to accumulated stats.
    fn accumulate(&self, stats: &mut [f64; 3], i: usize);
    /// Weighted node impurity (impurity × node weight); gain is the parent's
    /// value minus the children's.
    fn node_cost(&self, stats: &[f64; 3]) -> f64;
    fn weight(&self, stats: &[f64; 3]) -> f64 {
        stats[0]
    }
    fn is_pure(&self, stats: &[f64; 3]) -> bool;
    fn leaf_value(&self, samples: &[usize]) -> f64;
}

/// Gini impurity on binary labels with per-sample weights.
pub(crate) struct Gini<'a> {
    pub labels: &'a [u8],
    pub weights: &'a [f64],
}

impl Criterion for Gini<'_> {
    fn accumulate(&self, stats: &mut [f64; 3], i: usize) {
        stats[0] += self.weights[i];
        stats[1] += self.weights[i] * f64::from(self.labels[i]);
    }

    fn node_cost(&self, s: &[f64; 3]) -> f64 {
        if s[0] <= 0.0 {
            return 0.0;
        }
        // W * (1 - p^2 - (1-p)^2) = 2 * pos * neg / W
        2.0 * s[1] * (s[0] - s[1]) / s[0]
    }

    fn is_pure(&self, s: &[f64; 3]) -> bool {
        s[1] <= 0.0 || s[1] >= s[0]
    }

    fn leaf_value(&self, samples: &[usize]) -> f64 {
        let mut s = [0.0; 3];
        for &i in samples {
            self.accumulate(&mut s, i);
        }
        s[1] / s[0]
    }
}

/// Squared error on pseudo-residuals; leaves take a Newton step
/// `sum(residual) / sum(hessian)`.
pub(crate) struct NewtonResidual<'a> {
    pub residuals: &'a [f64],
    pub hessians: &'a [f64],
}

impl Criterion for NewtonResidual<'_> {
    fn accumulate(&self, stats: &mut [f64; 3], i: usize) {
        let r = self.residuals[i];
        stats[0] += 1.0;
        stats[1] += r;
        stats[2] += r * r;
    }

    fn node_cost(&self, s: &[f64; 3]) -> f64 {
        if s[0] <= 0.0 {
            return 0.0;
        }
        s[2] - s[1] * s[1] / s[0]
    }

    fn is_pure(&self, s: &[f64; 3]) -> bool {
        self.node_cost(s) <= 1e-14 * s[2].max(1e-300)
    }

    fn leaf_value(&self, samples: &[usize]) -> f64 {
        let (num, den) = samples
            .iter()
            .fold((0.0, 0.0), |(n, d), &i| (n + self.residuals[i], d + self.hessians[i]));
        num / den.max(1e-12)
    }
}

pub(crate) struct GrowOptions {
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    /// Columns examined per node; `None` examines all.
    pub features_per_split: Option<usize>,
}

pub(crate) struct Grown {
    pub tree: Tree,
    /// Total gain credited to each column.
    pub gains: Vec<f64>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

pub(crate) fn grow<C: Criterion>(
    design: &Matrix,
    samples: Vec<usize>,
    criterion: &C,
    options: &GrowOptions,
    mut rng: Option<&mut StageRng>,
) -> Grown {
    let width = design.n_cols();
    let mut gains = vec![0.0; width];
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    // (node slot, samples, depth)
    let mut stack = vec![(0usize, samples, 0usize)];
    let mut order: Vec<(f64, usize)> = Vec::new();

    while let Some((slot, node_samples, depth)) = stack.pop() {
        let mut stats = [0.0; 3];
        for &i in &node_samples {
            criterion.accumulate(&mut stats, i);
        }
        let depth_ok = options.max_depth.is_none_or(|d| depth < d);
        let splittable = depth_ok && node_samples.len() >= 2 && !criterion.is_pure(&stats);
        let best = if splittable {
            let candidates: Vec<usize> = match (options.features_per_split, rng.as_deref_mut()) {
                (Some(m), Some(rng)) if m < width => {
                    let mut cols = sample(rng, width, m).into_vec();
                    cols.sort_unstable();
                    cols
                }
                _ => (0..width).collect(),
            };
            find_split(design, &node_samples, &stats, criterion, &candidates, &mut order)
        } else {
            None
        };

        match best {
            None => nodes[slot] = Node::Leaf {
                value: criterion.leaf_value(&node_samples),
            },
            Some(split) => {
                gains[split.feature] += split.gain;
                let (left, right): (Vec<usize>, Vec<usize>) = node_samples
                    .iter()
                    .partition(|&&i| design.get(i, split.feature) <= split.threshold);
                let l = nodes.len();
                nodes.push(Node::Leaf { value: 0.0 });
                nodes.push(Node::Leaf { value: 0.0 });
                nodes[slot] = Node::Split {
                    feature: split.feature,
                    threshold: split.threshold,
                    left: l,
                    right: l + 1,
                };
                stack.push((l + 1, right, depth + 1));
                stack.push((l, left, depth + 1));
            }
        }
    }
    Grown {
        tree: Tree { nodes },
        gains,
    }
}

fn find_split<C: Criterion>(
    design: &Matrix,
    samples: &[usize],
    parent: &[f64; 3],
    criterion: &C,
    candidates: &[usize],
    order: &mut Vec<(f64, usize)>,
) -> Option<BestSplit> {
    let parent_cost = criterion.node_cost(parent);
    let mut best: Option<BestSplit> = None;
    for &f in candidates {
        order.clear();
        order.extend(samples.iter().map(|&i| (design.get(i, f), i)));
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut left = [0.0; 3];
        for k in 0..order.len() - 1 {
            criterion.accumulate(&mut left, order[k].1);
            let (lo, hi) = (order[k].0, order[k + 1].0);
            if lo == hi {
                continue;
            }
            let right = [parent[0] - left[0], parent[1] - left[1], parent[2] - left[2]];
            if criterion.weight(&left) <= 0.0 || criterion.weight(&right) <= 0.0 {
                continue;
            }
            let gain = parent_cost - criterion.node_cost(&left) - criterion.node_cost(&right);
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(BestSplit {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}
