//! Stratified k-fold grid search, one model kind at a time.
//!
//! Imputation and standardization are refitted on each fold's training
//! portion, so validation rows never influence the statistics a fold model
//! is trained with.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::cohort::Cohort;
use crate::data::preprocess::Preprocessor;
use crate::data::schema::FeatureSchema;
use crate::error::{Error, Result};
use crate::eval::roc::auc;
use crate::models::{
    train, BoostingParams, FeatureSubset, ForestParams, HyperParams, MaxDepth, ModelKind, TrainedModel,
    Weighting,
};
use crate::seed::{derive_seed, rng_from_seed};

/// Stratified validation folds, each sorted ascending. Members of each
/// class are shuffled, then classes are dealt round-robin in sequence, so
/// fold sizes (overall and per class) differ by at most one.
pub fn kfold_indices(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {k}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut folds = vec![Vec::new(); k];
    let mut position = 0usize;
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::Stratification(format!(
                "class {class} has {} member(s), fewer than {k} folds",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for i in members {
            folds[position % k].push(i);
            position += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

/// Candidate value lists for one model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Grid {
    LogisticRegression {
        l2_strength: Vec<f64>,
    },
    Knn {
        k: Vec<usize>,
        weighting: Vec<Weighting>,
    },
    RandomForest {
        n_trees: Vec<usize>,
        max_depth: Vec<MaxDepth>,
        features_per_split: Vec<FeatureSubset>,
    },
    GradientBoosting {
        n_stages: Vec<usize>,
        learning_rate: Vec<f64>,
        max_depth: Vec<usize>,
    },
    SvmLinear {
        cost_c: Vec<f64>,
    },
}

impl Grid {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::LogisticRegression => Grid::LogisticRegression {
                l2_strength: vec![0.01, 0.1, 1.0, 10.0],
            },
            ModelKind::Knn => Grid::Knn {
                k: vec![5, 15, 35, 75],
                weighting: vec![Weighting::Uniform, Weighting::InverseDistance],
            },
            ModelKind::RandomForest => Grid::RandomForest {
                n_trees: vec![100, 300],
                max_depth: vec![MaxDepth(Some(6)), MaxDepth(Some(12)), MaxDepth(None)],
                features_per_split: vec![FeatureSubset::Sqrt, FeatureSubset::Half],
            },
            ModelKind::GradientBoosting => Grid::GradientBoosting {
                n_stages: vec![100, 300],
                learning_rate: vec![0.05, 0.1],
                max_depth: vec![2, 3],
            },
            ModelKind::SvmLinear => Grid::SvmLinear {
                cost_c: vec![0.1, 1.0, 10.0],
            },
        }
    }

    /// A grid holding exactly `params`.
    pub fn single(params: &HyperParams) -> Self {
        match *params {
            HyperParams::LogisticRegression { l2_strength } => Grid::LogisticRegression {
                l2_strength: vec![l2_strength],
            },
            HyperParams::Knn { k, weighting } => Grid::Knn {
                k: vec![k],
                weighting: vec![weighting],
            },
            HyperParams::RandomForest(p) => Grid::RandomForest {
                n_trees: vec![p.n_trees],
                max_depth: vec![MaxDepth(p.max_depth)],
                features_per_split: vec![p.features_per_split],
            },
            HyperParams::GradientBoosting(p) => Grid::GradientBoosting {
                n_stages: vec![p.n_stages],
                learning_rate: vec![p.learning_rate],
                max_depth: vec![p.max_depth],
            },
            HyperParams::SvmLinear { cost_c } => Grid::SvmLinear { cost_c: vec![cost_c] },
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Grid::LogisticRegression { .. } => ModelKind::LogisticRegression,
            Grid::Knn { .. } => ModelKind::Knn,
            Grid::RandomForest { .. } => ModelKind::RandomForest,
            Grid::GradientBoosting { .. } => ModelKind::GradientBoosting,
            Grid::SvmLinear { .. } => ModelKind::SvmLinear,
        }
    }

    /// Cartesian expansion; the last-listed parameter varies fastest.
    pub fn candidates(&self) -> Vec<HyperParams> {
        let mut out = Vec::new();
        match self {
            Grid::LogisticRegression { l2_strength } => {
                out.extend(l2_strength.iter().map(|&l2| HyperParams::LogisticRegression { l2_strength: l2 }));
            }
            Grid::Knn { k, weighting } => {
                for &k in k {
                    for &weighting in weighting {
                        out.push(HyperParams::Knn { k, weighting });
                    }
                }
            }
            Grid::RandomForest {
                n_trees,
                max_depth,
                features_per_split,
            } => {
                for &n_trees in n_trees {
                    for &MaxDepth(max_depth) in max_depth {
                        for &features_per_split in features_per_split {
                            out.push(HyperParams::RandomForest(ForestParams {
                                n_trees,
                                max_depth,
                                features_per_split,
                                bootstrap: true,
                            }));
                        }
                    }
                }
            }
            Grid::GradientBoosting {
                n_stages,
                learning_rate,
                max_depth,
            } => {
                for &n_stages in n_stages {
                    for &learning_rate in learning_rate {
                        for &max_depth in max_depth {
                            out.push(HyperParams::GradientBoosting(BoostingParams {
                                n_stages,
                                learning_rate,
                                max_depth,
                            }));
                        }
                    }
                }
            }
            Grid::SvmLinear { cost_c } => {
                out.extend(cost_c.iter().map(|&c| HyperParams::SvmLinear { cost_c: c }));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let candidates = self.candidates();
        if candidates.is_empty() {
            return Err(Error::InvalidParams(format!("{} grid is empty", self.kind())));
        }
        candidates.iter().try_for_each(HyperParams::validate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub params: HyperParams,
    /// One AUC per completed fold, in fold order.
    pub fold_aucs: Vec<f64>,
    pub mean_auc: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvResult {
    pub kind: ModelKind,
    pub folds: usize,
    pub fold_seed: u64,
    pub candidates: Vec<CandidateScore>,
    pub best_index: usize,
    pub best_params: HyperParams,
    /// Best candidate retrained on the whole training partition.
    #[serde(skip)]
    pub final_model: Option<TrainedModel>,
    #[serde(skip)]
    pub final_preprocessor: Option<Preprocessor>,
    /// Out-of-fold probabilities of the best candidate, by training row.
    #[serde(skip)]
    pub oof_scores: Vec<f64>,
}

pub struct FoldOutcome {
    pub auc: f64,
    pub preprocessor: Preprocessor,
    pub model: TrainedModel,
    /// Validation row indices with their predicted probabilities.
    pub predictions: Vec<(usize, f64)>,
}

fn complement(n: usize, held_out: &[usize]) -> Vec<usize> {
    let mut keep = vec![true; n];
    held_out.iter().for_each(|&i| keep[i] = false);
    (0..n).filter(|&i| keep[i]).collect()
}

/// Fits preprocessing and the model on all folds but `fold`, then scores
/// the held-out fold.
pub fn evaluate_fold(
    params: &HyperParams,
    train: &Cohort,
    schema: &FeatureSchema,
    folds: &[Vec<usize>],
    fold: usize,
    seed: u64,
) -> Result<FoldOutcome> {
    let held_out = &folds[fold];
    let fit_idx = complement(train.n_samples(), held_out);
    let fit_part = train.subset(&fit_idx);
    let val_part = train.subset(held_out);
    let preprocessor = Preprocessor::fit(&fit_part, schema)?;
    let design = preprocessor.transform(&fit_part)?;
    let model = crate::models::train(params, &design, &fit_part.labels, preprocessor.catalog(), seed)?;
    let scores = model.predict_proba_batch(&preprocessor.transform(&val_part)?)?;
    let auc = auc(&scores, &val_part.labels)?;
    Ok(FoldOutcome {
        auc,
        preprocessor,
        model,
        predictions: held_out.iter().copied().zip(scores).collect(),
    })
}

pub fn fold_training_seed(seed: u64, fold: usize) -> u64 {
    derive_seed(seed, "fold-fit", fold as u64)
}

/// Runs `k`-fold CV for every candidate of `grid`, picks the highest mean
/// AUC (first candidate wins ties) and retrains it on all of `train`.
pub fn grid_search(grid: &Grid, train: &Cohort, schema: &FeatureSchema, k: usize, seed: u64) -> Result<CvResult> {
    grid.validate()?;
    let fold_seed = derive_seed(seed, "folds", 0);
    let folds = kfold_indices(&train.labels, k, fold_seed)?;
    let candidates = grid.candidates();

    let jobs: Vec<(usize, usize)> = (0..candidates.len())
        .flat_map(|c| (0..k).map(move |f| (c, f)))
        .collect();
    type Scored = Result<(f64, Vec<(usize, f64)>)>;
    let outcomes: Vec<Scored> = jobs
        .par_iter()
        .map(|&(c, f)| {
            evaluate_fold(&candidates[c], train, schema, &folds, f, fold_training_seed(seed, f))
                .map(|o| (o.auc, o.predictions))
        })
        .collect();

    let mut scores = Vec::with_capacity(candidates.len());
    let mut oof_per_candidate = Vec::with_capacity(candidates.len());
    let mut outcomes = outcomes.into_iter();
    for params in &candidates {
        let mut fold_aucs = Vec::with_capacity(k);
        let mut failure = None;
        let mut oof = vec![f64::NAN; train.n_samples()];
        for (f, outcome) in outcomes.by_ref().take(k).enumerate() {
            if failure.is_some() {
                continue;
            }
            match outcome {
                Ok((auc, preds)) => {
                    fold_aucs.push(auc);
                    preds.into_iter().for_each(|(i, p)| oof[i] = p);
                }
                Err(e) => failure = Some(format!("fold {f}: {e}")),
            }
        }
        let mean_auc = failure
            .is_none()
            .then(|| fold_aucs.iter().sum::<f64>() / fold_aucs.len() as f64);
        scores.push(CandidateScore {
            params: *params,
            fold_aucs,
            mean_auc,
            failure,
        });
        oof_per_candidate.push(oof);
    }

    let mut best: Option<(usize, f64)> = None;
    for (c, s) in scores.iter().enumerate() {
        if let Some(m) = s.mean_auc.filter(|m| !m.is_nan()) {
            if best.is_none_or(|(_, b)| m > b) {
                best = Some((c, m));
            }
        }
    }
    let Some((best_index, _)) = best else {
        let reasons: Vec<String> = scores.iter().filter_map(|s| s.failure.clone()).collect();
        return Err(Error::InvalidArgument(format!(
            "every {} candidate failed: {}",
            grid.kind(),
            reasons.join("; ")
        )));
    };
    let best_params = candidates[best_index];
    let preprocessor = Preprocessor::fit(train, schema)?;
    let design = preprocessor.transform(train)?;
    let final_model = train_final(&best_params, &design, &train.labels, &preprocessor, seed)?;

    Ok(CvResult {
        kind: grid.kind(),
        folds: k,
        fold_seed,
        best_index,
        best_params,
        candidates: scores,
        final_model: Some(final_model),
        final_preprocessor: Some(preprocessor),
        oof_scores: oof_per_candidate.swap_remove(best_index),
    })
}

fn train_final(
    params: &HyperParams,
    design: &crate::matrix::Matrix,
    labels: &[u8],
    preprocessor: &Preprocessor,
    seed: u64,
) -> Result<TrainedModel> {
    train(params, design, labels, preprocessor.catalog(), derive_seed(seed, "final-fit", 0))
}

impl CvResult {
    /// Delimited candidate table: params, one column per fold, mean.
    pub fn to_table(&self) -> String {
        let mut out = String::from("candidate,params");
        for f in 0..self.folds {
            out.push_str(&format!(",fold_{f}"));
        }
        out.push_str(",mean_auc,failure\n");
        for (c, s) in self.candidates.iter().enumerate() {
            out.push_str(&format!("{c},\"{}\"", s.params));
            for f in 0..self.folds {
                out.push(',');
                if let Some(a) = s.fold_aucs.get(f) {
                    out.push_str(&a.to_string());
                }
            }
            out.push(',');
            if let Some(m) = s.mean_auc {
                out.push_str(&m.to_string());
            }
            out.push(',');
            if let Some(fail) = &s.failure {
                out.push_str(&format!("\"{}\"", fail.replace('"', "'")));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_folds() {
        let labels: Vec<u8> = (0..100).map(|i| u8::from(i < 20)).collect();
        let folds = kfold_indices(&labels, 10, 3).unwrap();
        assert_eq!(folds.len(), 10);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        for f in &folds {
            assert_eq!(f.len(), 10);
            assert_eq!(f.iter().filter(|&&i| labels[i] == 1).count(), 2);
        }
        assert_eq!(folds, kfold_indices(&labels, 10, 3).unwrap());
    }

    #[test]
    fn uneven_sizes_differ_by_at_most_one() {
        let labels: Vec<u8> = (0..103).map(|i| u8::from(i % 4 == 0)).collect();
        let folds = kfold_indices(&labels, 10, 1).unwrap();
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn small_class_rejected() {
        let labels: Vec<u8> = (0..50).map(|i| u8::from(i < 5)).collect();
        assert!(matches!(kfold_indices(&labels, 10, 0), Err(Error::Stratification(_))));
        assert!(kfold_indices(&labels, 1, 0).is_err());
    }

    #[test]
    fn candidate_expansion() {
        assert_eq!(Grid::default_for(ModelKind::LogisticRegression).candidates().len(), 4);
        assert_eq!(Grid::default_for(ModelKind::Knn).candidates().len(), 8);
        assert_eq!(Grid::default_for(ModelKind::RandomForest).candidates().len(), 12);
        assert_eq!(Grid::default_for(ModelKind::GradientBoosting).candidates().len(), 8);
        assert_eq!(Grid::default_for(ModelKind::SvmLinear).candidates().len(), 3);
        for kind in ModelKind::ALL {
            let g = Grid::default_for(kind);
            g.validate().unwrap();
            assert_eq!(g.kind(), kind);
            let p = HyperParams::default_for(kind);
            assert_eq!(Grid::single(&p).candidates(), vec![p]);
        }
        let empty = Grid::SvmLinear { cost_c: vec![] };
        assert!(empty.validate().is_err());
    }
}
