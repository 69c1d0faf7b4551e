use std::path::Path;

use nalgebra::DVector;
use serde::Serialize;

use super::config::{ModelSpec, RunConfig};
use super::output::{aggregate, ensure_dir, write_config, write_json, write_summary_csv, write_trace, RunSummary};
use super::record::fmt_f64;
use super::runner::{build_problem, run_seed, stream_seed, SeedRun, STREAM_MCMC};
use crate::criterion::parameter_uncertainties;
use crate::numstats::GradientMatrix;
use crate::optim;
use crate::oracle::mcmc_run;
use crate::registry::{CriterionRegistry, CriterionSpec};
use crate::{Error, Result};

/// Runs every seed of `config` in memory.
pub fn run_seeds(config: &RunConfig, registry: &CriterionRegistry) -> Result<(Vec<SeedRun>, RunSummary)> {
    config.validate(registry)?;
    let runs = (0..config.seeds as u64)
        .map(|k| run_seed(config, registry, config.seed + k))
        .collect::<Result<Vec<_>>>()?;
    let outcomes: Vec<_> = runs.iter().flat_map(|r| r.outcomes.iter().cloned()).collect();
    let summary = RunSummary {
        aggregates: aggregate(&outcomes),
        outcomes,
    };
    Ok((runs, summary))
}

/// Writes `config.toml`, `trace.csv`, `summary.csv` and `summary.json` into
/// `out_dir`.
pub fn cmd_run(config: &RunConfig, registry: &CriterionRegistry, out_dir: &Path) -> Result<RunSummary> {
    let (runs, summary) = run_seeds(config, registry)?;
    ensure_dir(out_dir)?;
    write_config(out_dir, config)?;
    write_trace(&out_dir.join("trace.csv"), &runs)?;
    write_summary_csv(&out_dir.join("summary.csv"), &summary.outcomes)?;
    write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// One deterministic gradstop criterion per level, labelled `gradstop@u`.
pub fn sweep_criteria(u_values: &[f64]) -> Result<Vec<CriterionSpec>> {
    if u_values.is_empty() {
        return Err(Error::Config("threshold grid is empty".into()));
    }
    if let Some(bad) = u_values.iter().find(|u| !(0.0..=1.0).contains(*u)) {
        return Err(Error::Config(format!("threshold {bad} outside [0, 1]")));
    }
    Ok(u_values
        .iter()
        .map(|&u| CriterionSpec::gradstop(u).with_label(format!("gradstop@{}", fmt_f64(u))))
        .collect())
}

/// As [`cmd_run`] with the criteria replaced by a threshold grid. Every level
/// watches the same training run of each seed.
pub fn cmd_sweep(
    config: &RunConfig,
    registry: &CriterionRegistry,
    u_values: &[f64],
    out_dir: &Path,
) -> Result<RunSummary> {
    let mut config = config.clone();
    config.criteria = Some(sweep_criteria(u_values)?);
    cmd_run(&config, registry, out_dir)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncertaintyRow {
    pub parameter: String,
    pub theta: f64,
    pub sigma_gradstop: f64,
    pub sigma_mcmc: f64,
    /// Only for the quadratic model.
    pub sigma_exact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncertaintyReport {
    pub seed: u64,
    pub kappa: f64,
    pub rows: Vec<UncertaintyRow>,
    pub acceptance_rate: f64,
    pub step_scale: f64,
    pub warnings: Vec<String>,
}

/// Trains for the full budget with the first seed, then compares the
/// gradient-covariance uncertainty at the final iterate with an MCMC chain
/// started there.
pub fn uncertainty_report(config: &RunConfig) -> Result<UncertaintyReport> {
    config.validate(&CriterionRegistry::with_builtins())?;
    let seed = config.seed;
    let problem = build_problem(config, seed)?;
    let mut idle = |_: usize, _: &DVector<f64>, _: &GradientMatrix| -> Result<()> { Ok(()) };
    let state = optim::run(
        problem.model.as_ref(),
        &config.optimizer,
        problem.theta0.clone(),
        config.budget,
        &mut idle,
    )?;
    let theta = state.theta;
    let grads = problem.model.sample_gradients(&theta)?;
    let sigma_gradstop = parameter_uncertainties(&grads, config.kappa)?;
    let mut mcmc = config.mcmc;
    mcmc.seed = stream_seed(seed.wrapping_add(config.mcmc.seed), STREAM_MCMC);
    let chain = mcmc_run(problem.model.as_ref(), &theta, &mcmc)?;
    let sigma_mcmc = chain.std();
    let sigma_exact = match (&config.model, &problem.oracle) {
        (ModelSpec::Quadratic(_), Some(o)) => Some(o.marginal_std()),
        _ => None,
    };
    let rows = (0..theta.len())
        .map(|j| UncertaintyRow {
            parameter: problem.parameter_names[j].clone(),
            theta: theta[j],
            sigma_gradstop: sigma_gradstop[j],
            sigma_mcmc: sigma_mcmc[j],
            sigma_exact: sigma_exact.as_ref().map(|s| s[j]),
        })
        .collect();
    Ok(UncertaintyReport {
        seed,
        kappa: config.kappa,
        rows,
        acceptance_rate: chain.acceptance_rate,
        step_scale: chain.step_scale,
        warnings: chain.warnings,
    })
}

/// Writes `config.toml`, `uncertainty.csv` and `uncertainty.json`.
pub fn cmd_uncertainty(config: &RunConfig, out_dir: &Path) -> Result<UncertaintyReport> {
    let report = uncertainty_report(config)?;
    ensure_dir(out_dir)?;
    write_config(out_dir, config)?;
    let path = out_dir.join("uncertainty.csv");
    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["parameter", "theta", "sigma_gradstop", "sigma_mcmc", "sigma_exact"])?;
    for r in &report.rows {
        w.write_record([
            r.parameter.clone(),
            fmt_f64(r.theta),
            fmt_f64(r.sigma_gradstop),
            fmt_f64(r.sigma_mcmc),
            r.sigma_exact.map(fmt_f64).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_json(&out_dir.join("uncertainty.json"), &report)?;
    Ok(report)
}
