use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::roc::roc_curve;
use crate::data::cohort::Cohort;
use crate::data::preprocess::Preprocessor;
use crate::data::schema::FeatureSchema;
use crate::error::{Error, Result};
use crate::models::{train, HyperParams};
use crate::seed::{derive_seed, rng_from_seed};

pub const FPR_GRID_POINTS: usize = 101;
/// Resamples that miss a class are redrawn at most this many times.
pub const MAX_REDRAWS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapBand {
    pub n_boot: usize,
    pub fpr: Vec<f64>,
    pub mean_tpr: Vec<f64>,
    pub lower_tpr: Vec<f64>,
    pub upper_tpr: Vec<f64>,
    /// Test AUC of every replicate, in replicate order.
    pub aucs: Vec<f64>,
    pub mean_auc: f64,
    pub auc_lower: f64,
    pub auc_upper: f64,
}

/// Zero-based positions of the 2.5% and 97.5% order statistics among `n`
/// sorted values: ranks ceil(0.025 n) and ceil(0.975 n).
pub fn order_statistic_indices(n: usize) -> (usize, usize) {
    assert!(n > 0);
    let rank = |per_mille: usize| (n * per_mille).div_ceil(1000).max(1) - 1;
    (rank(25), rank(975))
}

fn fpr_grid() -> Vec<f64> {
    (0..FPR_GRID_POINTS)
        .map(|i| i as f64 / (FPR_GRID_POINTS - 1) as f64)
        .collect()
}

fn resample(n: usize, labels: &[u8], seed: u64) -> Result<Vec<usize>> {
    for attempt in 0..=MAX_REDRAWS {
        let mut rng = rng_from_seed(derive_seed(seed, "resample", attempt));
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let positives = idx.iter().filter(|&&i| labels[i] == 1).count();
        if positives > 0 && positives < n {
            return Ok(idx);
        }
    }
    Err(Error::Bootstrap(format!(
        "resample stayed single-class after {MAX_REDRAWS} redraws"
    )))
}

struct Replicate {
    tpr: Vec<f64>,
    auc: f64,
}

fn replicate(
    train_set: &Cohort,
    test: &Cohort,
    schema: &FeatureSchema,
    params: &HyperParams,
    seed: u64,
    grid: &[f64],
) -> Result<Replicate> {
    let idx = resample(train_set.n_samples(), &train_set.labels, seed)?;
    let sample = train_set.subset(&idx);
    let pre = Preprocessor::fit(&sample, schema)?;
    let design = pre.transform(&sample)?;
    let model = train(params, &design, &sample.labels, pre.catalog(), derive_seed(seed, "fit", 0))?;
    let scores = model.predict_proba_batch(&pre.transform(test)?)?;
    let roc = roc_curve(&scores, &test.labels)?;
    Ok(Replicate {
        tpr: grid.iter().map(|&x| roc.tpr_at(x)).collect(),
        auc: roc.auc,
    })
}

/// Bands from replicates trained on resamples of `train_set`, each scored on
/// the untouched `test` set. Replicate r draws from the r-th seed.
pub fn bootstrap_roc_with_seeds(
    train_set: &Cohort,
    test: &Cohort,
    schema: &FeatureSchema,
    params: &HyperParams,
    seeds: &[u64],
) -> Result<BootstrapBand> {
    if seeds.len() < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 replicates, got {}", seeds.len())));
    }
    params.validate()?;
    let grid = fpr_grid();
    let reps = seeds
        .par_iter()
        .map(|&s| replicate(train_set, test, schema, params, s, &grid))
        .collect::<Result<Vec<_>>>()?;

    let n = reps.len();
    let (lo, hi) = order_statistic_indices(n);
    let mut mean_tpr = Vec::with_capacity(grid.len());
    let mut lower_tpr = Vec::with_capacity(grid.len());
    let mut upper_tpr = Vec::with_capacity(grid.len());
    for j in 0..grid.len() {
        let mut column: Vec<f64> = reps.iter().map(|r| r.tpr[j]).collect();
        mean_tpr.push(column.iter().sum::<f64>() / n as f64);
        column.sort_by(f64::total_cmp);
        lower_tpr.push(column[lo]);
        upper_tpr.push(column[hi]);
    }
    let aucs: Vec<f64> = reps.iter().map(|r| r.auc).collect();
    let mut sorted = aucs.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(BootstrapBand {
        n_boot: n,
        fpr: grid,
        mean_tpr,
        lower_tpr,
        upper_tpr,
        mean_auc: aucs.iter().sum::<f64>() / n as f64,
        auc_lower: sorted[lo],
        auc_upper: sorted[hi],
        aucs,
    })
}

pub fn bootstrap_roc(
    train_set: &Cohort,
    test: &Cohort,
    schema: &FeatureSchema,
    params: &HyperParams,
    n_boot: usize,
    seed: u64,
) -> Result<BootstrapBand> {
    let seeds: Vec<u64> = (0..n_boot as u64).map(|r| derive_seed(seed, "bootstrap", r)).collect();
    bootstrap_roc_with_seeds(train_set, test, schema, params, &seeds)
}

impl BootstrapBand {
    pub fn band_csv(&self) -> String {
        let mut out = String::from("fpr,mean_tpr,lower_tpr,upper_tpr\n");
        for j in 0..self.fpr.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.fpr[j], self.mean_tpr[j], self.lower_tpr[j], self.upper_tpr[j]
            ));
        }
        out
    }

    pub fn aucs_csv(&self) -> String {
        let mut out = String::from("replicate,auc\n");
        for (i, a) in self.aucs.iter().enumerate() {
            out.push_str(&format!("{i},{a}\n"));
        }
        out
    }

    /// Grid indices where the mean curve escapes the band.
    pub fn bracket_violations(&self) -> Vec<usize> {
        (0..self.fpr.len())
            .filter(|&j| !(self.lower_tpr[j] <= self.mean_tpr[j] && self.mean_tpr[j] <= self.upper_tpr[j]))
            .collect()
    }
}
