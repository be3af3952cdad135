use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use onset_cli::commands::{cmd_bootstrap, cmd_evaluate, cmd_ingest, cmd_synth, cmd_train, cmd_tune, SynthArgs};
use onset_cli::{Layout, RunConfig};
use onset_core::models::ModelKind;

#[derive(Parser)]
#[command(name = "onset", version, about = "Diabetes onset classification from survey data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Run configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n_boot: Option<usize>,
    #[arg(long)]
    recall_target: Option<f64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Raw extract to ingest.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Read a raw extract, apply exclusions and labels, write the cohort.
    Ingest(Overrides),
    /// Write a synthetic raw extract.
    Synth {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0.19)]
        prevalence: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Destination of the generated extract.
        #[arg(long)]
        output: PathBuf,
        /// Directory receiving the config echo.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Grid-search a single model kind.
    Tune {
        #[command(flatten)]
        overrides: Overrides,
        /// One of logistic_regression, knn, random_forest, gradient_boosting, svm_linear.
        #[arg(long)]
        model: String,
    },
    /// Split, tune all five models and assemble the ensemble.
    Train(Overrides),
    /// Score the test partition and write reports and plots.
    Evaluate(Overrides),
    /// Bootstrap ROC bands for the best single model.
    Bootstrap(Overrides),
}

fn resolve(o: &Overrides) -> Result<RunConfig> {
    let mut config = match &o.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = o.seed {
        config.seed = v;
    }
    if let Some(v) = &o.out {
        config.out = v.clone();
    }
    if let Some(v) = o.n_boot {
        config.n_boot = v;
    }
    if let Some(v) = o.recall_target {
        config.recall_target = v;
    }
    if let Some(v) = o.jobs {
        config.jobs = Some(v);
    }
    if let Some(v) = &o.input {
        config.input = Some(v.clone());
    }
    config.resolve()
}

fn in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n);
    }
    builder.build().context("starting worker pool")?.install(f)
}

fn run(cli: Cli) -> Result<()> {
    let with_config = |o: &Overrides, f: &(dyn Fn(&RunConfig, &Layout) -> Result<()> + Sync)| -> Result<()> {
        let config = resolve(o)?;
        let layout = Layout::new(&config.out);
        in_pool(config.jobs, || f(&config, &layout))
    };
    match cli.command {
        Command::Synth {
            n,
            prevalence,
            seed,
            output,
            out,
        } => cmd_synth(
            &SynthArgs {
                n,
                seed,
                prevalence,
                output,
            },
            &Layout::new(out),
        ),
        Command::Ingest(o) => with_config(&o, &cmd_ingest),
        Command::Tune { overrides, model } => {
            let kind = ModelKind::parse(&model).with_context(|| format!("unknown model kind '{model}'"))?;
            with_config(&overrides, &|c, l| cmd_tune(c, l, kind))
        }
        Command::Train(o) => with_config(&o, &cmd_train),
        Command::Evaluate(o) => with_config(&o, &|c, l| cmd_evaluate(c, l).map(drop)),
        Command::Bootstrap(o) => with_config(&o, &|c, l| cmd_bootstrap(c, l).map(drop)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
