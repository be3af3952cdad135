use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use log::{info, warn};
use onset_core::data::ingest::write_raw_records;
use onset_core::data::synth::synthetic_records;
use onset_core::data::{build_cohort, ingest_delimited, split_indices, Cohort, IngestOptions, SplitIndices};
use onset_core::ensemble::{average_probabilities, EnsembleModel};
use onset_core::eval::plot::{band_svg, recall_svg, roc_svg};
use onset_core::eval::{
    auc, bootstrap_roc, choose_threshold, recall_vs_threshold, roc_curve, screening_summary, BootstrapBand,
    MetricsReport, ModelReport, ThresholdChoice,
};
use onset_core::models::{HyperParams, ModelKind, TrainedModel};
use onset_core::seed::derive_seed;
use onset_core::tuning::{grid_search, CvResult};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::layout::{require, write, Layout};

pub const ENSEMBLE_NAME: &str = "ensemble";

/// Probabilities per model name, ensemble last.
pub type NamedScores = Vec<(String, Vec<f64>)>;

fn echo(config: &RunConfig, layout: &Layout, command: &str) -> Result<()> {
    write(&layout.echo(command), config.to_toml()?)
}

fn load_cohort(config: &RunConfig, layout: &Layout) -> Result<Cohort> {
    let path = layout.cohort();
    require(&path, "ingest")?;
    let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
    Ok(Cohort::read_delimited(file, &config.schema()?)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitFile {
    pub seed: u64,
    pub test_fraction: f64,
    #[serde(flatten)]
    pub indices: SplitIndices,
}

fn load_split(layout: &Layout, cohort: &Cohort) -> Result<SplitIndices> {
    let path = layout.split();
    require(&path, "train")?;
    let split: SplitFile = serde_json::from_str(&fs::read_to_string(&path)?)
        .with_context(|| format!("parsing {}", path.display()))?;
    let n = cohort.n_samples();
    ensure!(
        split.indices.train.len() + split.indices.test.len() == n
            && split.indices.train.iter().chain(&split.indices.test).all(|&i| i < n),
        "{} does not match the cohort ({n} samples)",
        path.display()
    );
    Ok(split.indices)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthArgs {
    pub n: usize,
    pub seed: u64,
    pub prevalence: f64,
    pub output: PathBuf,
}

/// Writes a synthetic raw extract in the same column layout `ingest` reads.
pub fn cmd_synth(args: &SynthArgs, layout: &Layout) -> Result<()> {
    ensure!(args.n >= 20, "synthetic cohorts need n >= 20, got {}", args.n);
    ensure!(
        args.prevalence > 0.0 && args.prevalence < 1.0,
        "prevalence must lie in (0, 1), got {}",
        args.prevalence
    );
    let records = synthetic_records(args.n, args.seed, args.prevalence);
    if let Some(parent) = args.output.parent() {
        fs::create_dir_all(parent)?;
    }
    let file = File::create(&args.output).with_context(|| format!("creating {}", args.output.display()))?;
    write_raw_records(BufWriter::new(file), &records, &onset_core::data::FeatureSchema::table1())?;
    write(&layout.echo("synth"), toml::to_string(args)?)?;
    info!("wrote {} synthetic records to {}", records.len(), args.output.display());
    Ok(())
}

pub fn cmd_ingest(config: &RunConfig, layout: &Layout) -> Result<()> {
    let Some(input) = &config.input else {
        bail!("no input file: set `input` in the config or pass --input");
    };
    let schema = config.schema()?;
    let records = ingest_delimited(
        input,
        &schema,
        IngestOptions {
            delimiter: config.delimiter as u8,
        },
    )?;
    let (cohort, report) = build_cohort(&records);
    layout.dir("cohort")?;
    let path = layout.cohort();
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    cohort.write_delimited(BufWriter::new(file), &schema)?;
    write(&layout.exclusions(), report.to_string())?;
    echo(config, layout, "ingest")?;
    info!(
        "cohort of {} samples ({} diabetic) from {} records",
        report.cohort_size, report.positives, report.total_read
    );
    Ok(())
}

fn cv_seed(config: &RunConfig) -> u64 {
    derive_seed(config.seed, "cv", 0)
}

fn split_and_train(config: &RunConfig, layout: &Layout) -> Result<(Cohort, SplitIndices)> {
    let cohort = load_cohort(config, layout)?;
    let seed = derive_seed(config.seed, "split", 0);
    let indices = split_indices(&cohort.labels, config.test_fraction, seed)?;
    let file = SplitFile {
        seed,
        test_fraction: config.test_fraction,
        indices: indices.clone(),
    };
    write(&layout.split(), serde_json::to_string_pretty(&file)? + "\n")?;
    Ok((cohort, indices))
}

fn tune_kind(config: &RunConfig, layout: &Layout, kind: ModelKind, train: &Cohort) -> Result<CvResult> {
    info!("tuning {kind}: {} candidates", config.grid(kind).candidates().len());
    let cv = grid_search(&config.grid(kind), train, &config.schema()?, config.cv_folds, cv_seed(config))?;
    write(&layout.cv_report(kind), serde_json::to_string_pretty(&cv)? + "\n")?;
    write(&layout.cv_table(kind), cv.to_table())?;
    let model = cv.final_model.as_ref().expect("grid search attaches the final model");
    layout.dir("models")?;
    model.save(&layout.model(kind))?;
    info!(
        "{kind}: best {} with mean AUC {:.4}",
        cv.best_params,
        cv.candidates[cv.best_index].mean_auc.unwrap_or(f64::NAN)
    );
    Ok(cv)
}

/// Cross-validates one model kind and stores its report and artifact.
pub fn cmd_tune(config: &RunConfig, layout: &Layout, kind: ModelKind) -> Result<()> {
    let (cohort, split) = split_and_train(config, layout)?;
    tune_kind(config, layout, kind, &cohort.subset(&split.train))?;
    echo(config, layout, "tune")
}

/// Splits, tunes all five models, then fixes T on out-of-fold ensemble
/// probabilities over the training partition.
pub fn cmd_train(config: &RunConfig, layout: &Layout) -> Result<()> {
    echo(config, layout, "train")?;
    let (cohort, split) = split_and_train(config, layout)?;
    let train = cohort.subset(&split.train);
    info!("training partition {} / test {}", split.train.len(), split.test.len());

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for kind in ModelKind::ALL {
        match tune_kind(config, layout, kind, &train) {
            Ok(cv) => results.push(cv),
            Err(e) => {
                warn!("{kind} failed: {e:#}");
                failures.push(format!("{kind}: {e:#}"));
            }
        }
    }
    if !failures.is_empty() {
        bail!("ensemble needs all five models; failed: {}", failures.join("; "));
    }

    let oof: Vec<f64> = (0..train.n_samples())
        .map(|i| average_probabilities(&results.iter().map(|r| r.oof_scores[i]).collect::<Vec<_>>()))
        .collect::<onset_core::Result<_>>()?;
    let choice = choose_threshold(&oof, &train.labels, config.recall_target)?;
    write(&layout.threshold(), serde_json::to_string_pretty(&choice)? + "\n")?;

    let preprocessor = results[0].final_preprocessor.clone().expect("attached by grid search");
    let members: Vec<TrainedModel> = results.into_iter().map(|r| r.final_model.expect("attached")).collect();
    let ensemble = EnsembleModel::new(members, choice.decision_boundary, preprocessor)?;
    ensemble.save(&layout.ensemble())?;
    info!(
        "decision boundary T = {:.2} (cutoff {:.2}); out-of-fold recall diabetic {:.3}, non-diabetic {:.3}",
        choice.decision_boundary, choice.cutoff, choice.diabetic_recall, choice.non_diabetic_recall
    );
    Ok(())
}

pub struct Loaded {
    pub cohort: Cohort,
    pub split: SplitIndices,
    pub ensemble: EnsembleModel,
    pub threshold: ThresholdChoice,
}

pub fn load_trained(config: &RunConfig, layout: &Layout) -> Result<Loaded> {
    let cohort = load_cohort(config, layout)?;
    let split = load_split(layout, &cohort)?;
    require(&layout.ensemble(), "train")?;
    let ensemble = EnsembleModel::load(&layout.ensemble())?;
    require(&layout.threshold(), "train")?;
    let threshold = serde_json::from_str(&fs::read_to_string(layout.threshold())?)?;
    Ok(Loaded {
        cohort,
        split,
        ensemble,
        threshold,
    })
}

/// Test-set probabilities per model name, ensemble last.
pub fn test_scores(loaded: &Loaded) -> Result<(Cohort, NamedScores)> {
    let test = loaded.cohort.subset(&loaded.split.test);
    let design = loaded.ensemble.preprocessor.transform(&test)?;
    let predictions = loaded.ensemble.predict_encoded(&design)?;
    let mut scores: NamedScores = loaded
        .ensemble
        .members
        .iter()
        .enumerate()
        .map(|(m, model)| (model.kind().to_string(), predictions.iter().map(|p| p.members[m]).collect()))
        .collect();
    scores.push((ENSEMBLE_NAME.into(), predictions.iter().map(|p| p.mean).collect()));
    Ok((test, scores))
}

pub fn metrics_report(loaded: &Loaded, test: &Cohort, scores: &[(String, Vec<f64>)]) -> Result<MetricsReport> {
    let t = loaded.ensemble.decision_boundary;
    let mut models = BTreeMap::new();
    for (name, s) in scores {
        models.insert(name.clone(), ModelReport::evaluate(s, &test.labels, t)?);
    }
    let negative_recall = models[ENSEMBLE_NAME].chosen.metrics.non_diabetic.recall;
    let screening = screening_summary(
        loaded.cohort.n_samples() as u64,
        1.0 - loaded.cohort.prevalence(),
        negative_recall,
    )?;
    Ok(MetricsReport {
        test_size: test.n_samples(),
        models,
        threshold: loaded.threshold,
        screening,
    })
}

pub fn cmd_evaluate(config: &RunConfig, layout: &Layout) -> Result<MetricsReport> {
    let loaded = load_trained(config, layout)?;
    let (test, scores) = test_scores(&loaded)?;
    let report = metrics_report(&loaded, &test, &scores)?;
    layout.dir("eval")?;
    write(&layout.eval("metrics.json"), report.to_json()?)?;
    write(&layout.eval("table.csv"), report.table_csv())?;

    let t = loaded.ensemble.decision_boundary;
    let mut rocs = Vec::new();
    for (name, s) in &scores {
        let roc = roc_curve(s, &test.labels)?;
        write(&layout.eval(&format!("roc_{name}.csv")), roc.to_csv())?;
        let curves = recall_vs_threshold(s, &test.labels)?;
        write(&layout.eval(&format!("recall_{name}.csv")), curves.to_csv())?;
        write(
            &layout.eval(&format!("recall_{name}.svg")),
            recall_svg(&format!("Recall vs decision boundary: {name}"), &curves, t),
        )?;
        rocs.push((name.clone(), roc));
    }
    let labelled: Vec<(String, &_)> = rocs.iter().map(|(n, r)| (n.clone(), r)).collect();
    write(&layout.eval("roc.svg"), roc_svg("ROC curves on the test set", &labelled))?;

    let predictions = loaded.ensemble.predict(&test)?;
    write(
        &layout.eval("predictions.csv"),
        loaded.ensemble.predictions_csv(&test.ids, &predictions),
    )?;
    write(&layout.eval("importances.csv"), importances_csv(&loaded.ensemble)?)?;
    echo(config, layout, "evaluate")?;
    let e = &report.models[ENSEMBLE_NAME];
    info!(
        "ensemble AUC {:.4}; at T = {:.2}: diabetic recall {:.3}, non-diabetic recall {:.3}",
        e.auc, t, e.chosen.metrics.diabetic.recall, e.chosen.metrics.non_diabetic.recall
    );
    Ok(report)
}

fn importances_csv(ensemble: &EnsembleModel) -> Result<String> {
    let kinds = [ModelKind::RandomForest, ModelKind::GradientBoosting];
    let columns = kinds
        .iter()
        .map(|&k| {
            ensemble
                .member(k)
                .context("ensemble member missing")
                .and_then(|m| Ok(m.feature_importances()?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = format!("feature,{},{}\n", kinds[0], kinds[1]);
    for (i, (name, v)) in columns[0].iter().enumerate() {
        out.push_str(&format!("{name},{v},{}\n", columns[1][i].1));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub model: ModelKind,
    pub params: HyperParams,
    pub test_auc: f64,
    pub n_boot: usize,
    pub mean_auc: f64,
    pub auc_lower: f64,
    pub auc_upper: f64,
    /// FPR grid points where the mean curve falls outside the band.
    pub bracket_violations: Vec<usize>,
}

/// Retrains the best single model by test AUC on resampled training sets.
pub fn cmd_bootstrap(config: &RunConfig, layout: &Layout) -> Result<BootstrapBand> {
    let loaded = load_trained(config, layout)?;
    let (test, scores) = test_scores(&loaded)?;
    let mut best: Option<(usize, f64)> = None;
    for (m, (_, s)) in scores[..loaded.ensemble.members.len()].iter().enumerate() {
        let a = auc(s, &test.labels)?;
        if best.is_none_or(|(_, b)| a > b) {
            best = Some((m, a));
        }
    }
    let (m, test_auc) = best.context("no ensemble members")?;
    let member = &loaded.ensemble.members[m];
    info!("bootstrapping {} over {} replicates", member.kind(), config.n_boot);
    let train = loaded.cohort.subset(&loaded.split.train);
    let band = bootstrap_roc(
        &train,
        &test,
        &config.schema()?,
        &member.params,
        config.n_boot,
        derive_seed(config.seed, "bootstrap", 0),
    )?;
    let summary = BootstrapSummary {
        model: member.kind(),
        params: member.params,
        test_auc,
        n_boot: band.n_boot,
        mean_auc: band.mean_auc,
        auc_lower: band.auc_lower,
        auc_upper: band.auc_upper,
        bracket_violations: band.bracket_violations(),
    };
    if !summary.bracket_violations.is_empty() {
        warn!(
            "mean curve leaves the band at {} grid point(s)",
            summary.bracket_violations.len()
        );
    }
    layout.dir("bootstrap")?;
    write(&layout.bootstrap("band.csv"), band.band_csv())?;
    write(&layout.bootstrap("aucs.csv"), band.aucs_csv())?;
    write(&layout.bootstrap("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    write(
        &layout.bootstrap("band.svg"),
        band_svg(&format!("Bootstrap ROC band: {}", member.kind()), &band),
    )?;
    echo(config, layout, "bootstrap")?;
    info!(
        "bootstrap mean AUC {:.4}, interval [{:.4}, {:.4}]",
        band.mean_auc, band.auc_lower, band.auc_upper
    );
    Ok(band)
}
