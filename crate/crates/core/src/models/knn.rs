//! k-nearest neighbours on the standardized design grid.

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Uniform,
    InverseDistance,
}

impl Weighting {
    pub fn as_str(self) -> &'static str {
        match self {
            Weighting::Uniform => "uniform",
            Weighting::InverseDistance => "inverse_distance",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub weighting: Weighting,
    pub points: Matrix,
    pub labels: Vec<u8>,
}

impl KnnModel {
    pub fn new(points: Matrix, labels: Vec<u8>, k: usize, weighting: Weighting) -> Self {
        Self {
            k,
            weighting,
            points,
            labels,
        }
    }

    /// Indices of the `k` nearest stored points with their squared
    /// distances; equal distances keep the lower index.
    pub fn neighbours(&self, x: &[f64]) -> Vec<(f64, usize)> {
        let mut dist: Vec<(f64, usize)> = self
            .points
            .rows()
            .enumerate()
            .map(|(i, p)| (p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let k = self.k.min(dist.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k, cmp);
            dist.truncate(k);
        }
        dist.sort_by(cmp);
        dist
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let nb = self.neighbours(x);
        match self.weighting {
            Weighting::Uniform => {
                nb.iter().map(|&(_, i)| f64::from(self.labels[i])).sum::<f64>() / nb.len() as f64
            }
            Weighting::InverseDistance => {
                // exact matches dominate: average over them alone
                let exact: Vec<usize> = nb.iter().filter(|(d, _)| *d == 0.0).map(|&(_, i)| i).collect();
                if !exact.is_empty() {
                    return exact.iter().map(|&i| f64::from(self.labels[i])).sum::<f64>() / exact.len() as f64;
                }
                let (num, den) = nb.iter().fold((0.0, 0.0), |(n, d), &(d2, i)| {
                    let w = 1.0 / d2.sqrt();
                    (n + w * f64::from(self.labels[i]), d + w)
                });
                num / den
            }
        }
    }
}
