use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use gradstop::experiment::{cmd_run, cmd_sweep, cmd_uncertainty, RunConfig, RunSummary};
use gradstop::registry::CriterionRegistry;
use gradstop::Error;

#[derive(Parser)]
#[command(
    name = "gradstop",
    version,
    about = "Early stopping experiments without a validation set"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and record every configured stopping criterion.
    Run(Common),
    /// Deterministic gradstop over a grid of thresholds.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated thresholds.
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
        u_values: Vec<f64>,
    },
    /// Compare gradient-covariance uncertainty with an MCMC posterior.
    Uncertainty(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of consecutive seeds to run.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Threshold of every deterministic gradstop criterion.
    #[arg(long)]
    threshold: Option<f64>,
    /// Patience of the gradient baselines and the validation criterion.
    #[arg(long)]
    patience: Option<usize>,
}

impl Common {
    fn load(&self) -> anyhow::Result<RunConfig> {
        let mut config = RunConfig::load(&self.config).with_context(|| format!("loading {}", self.config.display()))?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(seeds) = self.seeds {
            config.seeds = seeds;
        }
        if let Some(budget) = self.budget {
            config.budget = budget;
        }
        if let Some(kappa) = self.kappa {
            config.kappa = kappa;
        }
        if self.threshold.is_some() || self.patience.is_some() {
            let mut criteria = config.criteria();
            for c in &mut criteria {
                let kind = c.kind.to_ascii_lowercase();
                if kind == "gradstop" && c.mode.as_deref().unwrap_or("deterministic") == "deterministic" {
                    c.threshold = self.threshold.or(c.threshold);
                }
                if ["eb", "gsnr", "sign", "cos", "gd", "validation"].contains(&kind.as_str()) {
                    c.patience = self.patience.or(c.patience);
                }
            }
            config.criteria = Some(criteria);
        }
        Ok(config)
    }
}

fn print_summary(summary: &RunSummary) {
    println!(
        "{:<16} {:>5} {:>6} {:>12} {:>22} {:>22}",
        "criterion", "runs", "fired", "iteration", "test_loss", "train_loss"
    );
    let fmt = |s: Option<gradstop::experiment::Stats>| match s {
        Some(s) => format!("{:.4} ± {:.4}", s.mean, s.std),
        None => "-".into(),
    };
    for a in &summary.aggregates {
        println!(
            "{:<16} {:>5} {:>6} {:>12.1} {:>22} {:>22}",
            a.criterion,
            a.runs,
            a.fired,
            a.iteration.map_or(f64::NAN, |s| s.mean),
            fmt(a.test_loss),
            fmt(a.train_loss)
        );
    }
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let registry = CriterionRegistry::with_builtins();
    match cli.command {
        Command::Run(common) => {
            let config = common.load()?;
            let summary = cmd_run(&config, &registry, &common.out)?;
            print_summary(&summary);
        }
        Command::Sweep { common, u_values } => {
            let config = common.load()?;
            let summary = cmd_sweep(&config, &registry, &u_values, &common.out)?;
            print_summary(&summary);
        }
        Command::Uncertainty(common) => {
            let config = common.load()?;
            let report = cmd_uncertainty(&config, &common.out)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{:<12} {:>14} {:>14} {:>14}",
                "parameter", "sigma_gradstop", "sigma_mcmc", "sigma_exact"
            );
            for r in &report.rows {
                let exact = r.sigma_exact.map_or("-".into(), |s| format!("{s:.6}"));
                println!(
                    "{:<12} {:>14.6} {:>14.6} {:>14}",
                    r.parameter, r.sigma_gradstop, r.sigma_mcmc, exact
                );
            }
            println!(
                "mcmc acceptance {:.3}, step scale {:.4e}",
                report.acceptance_rate, report.step_scale
            );
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_) | Error::UnknownCriterion(_) | Error::InvalidSplit(_)) => 2,
        Some(Error::Io { .. } | Error::Csv(_)) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
