use onset_core::data::{build_cohort, synth::synthetic_records, FeatureSchema, Preprocessor};
use onset_core::models::tree::Node;
use onset_core::models::{boosting, forest, train, BoostingParams, FeatureSubset, ForestParams, HyperParams};
use onset_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn synthetic_design(n: usize, seed: u64) -> (Matrix, Vec<u8>, Preprocessor) {
    let (cohort, _) = build_cohort(&synthetic_records(n, seed, 0.19));
    let pre = Preprocessor::fit(&cohort, &FeatureSchema::table1()).unwrap();
    (pre.transform(&cohort).unwrap(), cohort.labels, pre)
}

#[test]
fn boosting_training_loss_never_increases() {
    let (design, labels, _) = synthetic_design(500, 41);
    let params = BoostingParams {
        n_stages: 100,
        learning_rate: 0.1,
        max_depth: 3,
    };
    let model = boosting::fit(&design, &labels, &params);
    let staged = model.staged_log_loss(&design, &labels);
    assert!(staged.len() >= 2);
    for w in staged.windows(2) {
        assert!(w[1] <= w[0], "loss rose from {} to {}", w[0], w[1]);
    }
    assert_eq!(staged, model.train_loss);
    assert!(staged.last().unwrap() < staged.first().unwrap());
}

/// Best (feature, midpoint) under squared error on residuals, scanned
/// directly; the first strictly better candidate wins.
fn brute_force_stump(design: &Matrix, residuals: &[f64]) -> (usize, f64) {
    let sse = |idx: &[usize]| {
        let n = idx.len() as f64;
        let s: f64 = idx.iter().map(|&i| residuals[i]).sum();
        let s2: f64 = idx.iter().map(|&i| residuals[i] * residuals[i]).sum();
        s2 - s * s / n
    };
    let all: Vec<usize> = (0..design.n_rows()).collect();
    let parent = sse(&all);
    let mut best = (usize::MAX, f64::NAN, f64::NEG_INFINITY);
    for j in 0..design.n_cols() {
        let mut values = design.column(j);
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let (l, r): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| design.get(i, j) <= t);
            let gain = parent - sse(&l) - sse(&r);
            if gain > best.2 {
                best = (j, t, gain);
            }
        }
    }
    (best.0, best.1)
}

#[test]
fn first_boosting_stump_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..5 {
        let (n, d) = (80, 4);
        let data: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
        let design = Matrix::new(n, d, data).unwrap();
        let labels: Vec<u8> = (0..n).map(|i| u8::from(design.get(i, 2) + 0.3 * rng.random::<f64>() > 0.6)).collect();
        let model = boosting::fit(
            &design,
            &labels,
            &BoostingParams {
                n_stages: 1,
                learning_rate: 0.1,
                max_depth: 1,
            },
        );
        let prevalence = labels.iter().map(|&y| f64::from(y)).sum::<f64>() / n as f64;
        let residuals: Vec<f64> = labels.iter().map(|&y| f64::from(y) - prevalence).collect();
        let (feature, threshold) = brute_force_stump(&design, &residuals);
        match model.trees[0].nodes[0] {
            Node::Split {
                feature: f,
                threshold: t,
                ..
            } => assert_eq!((f, t), (feature, threshold)),
            Node::Leaf { .. } => panic!("expected a split"),
        }
    }
}

#[test]
fn forest_importances_sum_to_one_and_find_the_signal() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let n = 400;
    // column 0 drives the label, columns 1..4 are noise
    let data: Vec<f64> = (0..n * 4).map(|_| rng.random::<f64>()).collect();
    let design = Matrix::new(n, 4, data).unwrap();
    let labels: Vec<u8> = (0..n).map(|i| u8::from(design.get(i, 0) > 0.5)).collect();
    let params = ForestParams {
        n_trees: 50,
        max_depth: Some(4),
        features_per_split: FeatureSubset::Half,
        bootstrap: true,
    };
    let model = forest::fit(&design, &labels, &params, 7);
    let total: f64 = model.importances.iter().sum();
    assert!((total - 1.0).abs() < 1e-6);
    assert!(model.importances[1..].iter().all(|&v| v < model.importances[0]));
}

#[test]
fn importances_aggregate_over_the_sixteen_features() {
    let (design, labels, pre) = synthetic_design(600, 44);
    let params = HyperParams::RandomForest(ForestParams {
        n_trees: 60,
        max_depth: Some(8),
        features_per_split: FeatureSubset::Sqrt,
        bootstrap: true,
    });
    let model = train(&params, &design, &labels, pre.catalog(), 3).unwrap();
    let importances = model.feature_importances().unwrap();
    assert_eq!(importances.len(), 16);
    let names: Vec<&str> = importances.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, FeatureSchema::table1().names().collect::<Vec<_>>());
    let total: f64 = importances.iter().map(|(_, v)| v).sum();
    assert!((total - 1.0).abs() < 1e-6);
    assert!(importances.iter().all(|&(_, v)| v >= 0.0));
}
