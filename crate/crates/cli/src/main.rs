use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use veriscope_core::demo::DemoConfig;
use veriscope_core::rebalance::Method;

mod config;
mod demo;
mod error;
mod manifest;
mod stages;
mod table;

use error::{runtime, CliError, Result};
use stages::{run_stage, Ctx, Stage, PIPELINE};

#[derive(Debug, Parser)]
#[command(name = "veriscope", version, about = "Verification-status analysis pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load and check the input files; writes the ingestion report.
    Validate(RunArgs),
    /// Fit the author-level topic model.
    Topics(RunArgs),
    /// Build the feature matrix and the train/test split.
    Featurize(RunArgs),
    /// All-relevant feature selection on the training split.
    Select(RunArgs),
    /// Resample the training split.
    Rebalance(RunArgs),
    /// Train logistic regression and boosted trees.
    Train(RunArgs),
    /// Held-out metrics for every trained model.
    Evaluate(RunArgs),
    /// Impurity importances over hyperparameter-varied retrains.
    Importance(RunArgs),
    /// K-Means++ over the top-ranked features, with per-cluster profiles.
    Cluster(RunArgs),
    /// Per-user topical span.
    Span(RunArgs),
    /// Verification probability for every user.
    Score(RunArgs),
    /// Bundle the metric tables.
    Report(RunArgs),
    /// Every stage in order.
    All(RunArgs),
    /// Write a synthetic corpus and a matching config file.
    GenerateDemo(DemoArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(short, long, env = "VERISCOPE_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory (`output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory holding the four input files (`input.dir`).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Thread cap; 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
    /// Resampler for the main model.
    #[arg(long)]
    rebalance: Option<Method>,
    /// Resampler neighbourhood size.
    #[arg(long)]
    k: Option<usize>,
    /// Resampler balance level in (0, 1].
    #[arg(long)]
    beta: Option<f64>,
    /// Any config key, e.g. `--set topics.n_iter=500`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Args)]
struct DemoArgs {
    /// Directory to write the corpus into.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DemoConfig::default().users)]
    users: usize,
    #[arg(long, default_value_t = DemoConfig::default().verified_fraction)]
    verified_fraction: f64,
    /// Scale of every class-conditional shift; 0 makes classes exchangeable.
    #[arg(long, default_value_t = DemoConfig::default().separation)]
    separation: f64,
    /// Planted topic count.
    #[arg(long, default_value_t = DemoConfig::default().topics)]
    topics: usize,
    #[arg(long, default_value_t = DemoConfig::default().seed)]
    seed: u64,
}

impl RunArgs {
    fn overrides(&self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        if let Some(p) = &self.out {
            out.push(("output_dir".into(), toml_string(&p.to_string_lossy())));
        }
        if let Some(p) = &self.input {
            out.push(("input.dir".into(), toml_string(&p.to_string_lossy())));
        }
        if let Some(s) = self.seed {
            out.push(("seed".into(), s.to_string()));
        }
        if let Some(t) = self.threads {
            out.push(("threads".into(), t.to_string()));
        }
        if let Some(m) = self.rebalance {
            out.push(("rebalance.method".into(), toml_string(m.as_str())));
        }
        if let Some(k) = self.k {
            out.push(("rebalance.k".into(), k.to_string()));
        }
        if let Some(b) = self.beta {
            out.push(("rebalance.beta".into(), format!("{b:?}")));
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Config(vec![format!("--set expects KEY=VALUE, got {kv:?}")]))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(out)
    }
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn run_pipeline(args: &RunArgs, stages: &[Stage]) -> Result<()> {
    let cfg = config::load(args.config.as_deref(), std::env::vars(), &args.overrides()?)?;
    cfg.validate(stages.iter().any(|s| s.needs_input()))?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(runtime)?;
    }
    let ctx = Ctx::new(cfg);
    for &stage in stages {
        run_stage(&ctx, stage)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let (args, stages): (&RunArgs, Vec<Stage>) = match &cli.command {
        Command::GenerateDemo(d) => {
            let demo = DemoConfig {
                users: d.users,
                verified_fraction: d.verified_fraction,
                separation: d.separation,
                topics: d.topics,
                seed: d.seed,
                ..Default::default()
            };
            if demo.users < 2 || !(demo.verified_fraction > 0.0 && demo.verified_fraction < 1.0) || demo.topics == 0 {
                return Err(CliError::Config(vec![
                    "generate-demo needs users >= 2, verified fraction in (0, 1) and topics >= 1".into(),
                ]));
            }
            return demo::write_demo(&d.out, &demo);
        }
        Command::Validate(a) => (a, vec![Stage::Validate]),
        Command::Topics(a) => (a, vec![Stage::Topics]),
        Command::Featurize(a) => (a, vec![Stage::Featurize]),
        Command::Select(a) => (a, vec![Stage::Select]),
        Command::Rebalance(a) => (a, vec![Stage::Rebalance]),
        Command::Train(a) => (a, vec![Stage::Train]),
        Command::Evaluate(a) => (a, vec![Stage::Evaluate]),
        Command::Importance(a) => (a, vec![Stage::Importance]),
        Command::Cluster(a) => (a, vec![Stage::Cluster]),
        Command::Span(a) => (a, vec![Stage::Span]),
        Command::Score(a) => (a, vec![Stage::Score]),
        Command::Report(a) => (a, vec![Stage::Report]),
        Command::All(a) => (a, PIPELINE.to_vec()),
    };
    run_pipeline(args, &stages)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VERISCOPE_LOG", "info"))
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
