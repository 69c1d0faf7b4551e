use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::models::LossModel;
use crate::{Error, Result};

const TARGET_ACCEPTANCE: f64 = 0.3;
const ACCEPTANCE_BAND: (f64, f64) = (0.1, 0.6);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcConfig {
    /// Retained samples after burn-in and thinning.
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_thin")]
    pub thin: usize,
    /// Proposal scale; tuned by a pilot run when absent.
    #[serde(default)]
    pub step_scale: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

fn default_samples() -> usize {
    10_000
}
fn default_burn_in() -> usize {
    10_000
}
fn default_thin() -> usize {
    10
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            n_samples: default_samples(),
            burn_in: default_burn_in(),
            thin: default_thin(),
            step_scale: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct McmcChain {
    pub samples: Vec<DVector<f64>>,
    pub acceptance_rate: f64,
    pub step_scale: f64,
    pub warnings: Vec<String>,
}

impl McmcChain {
    pub fn mean(&self) -> DVector<f64> {
        let n = self.samples.len() as f64;
        self.samples.iter().fold(DVector::zeros(self.dim()), |acc, s| acc + s) / n
    }

    /// Per-coordinate sample standard deviation.
    pub fn std(&self) -> Vec<f64> {
        let mean = self.mean();
        let n = self.samples.len() as f64;
        (0..self.dim())
            .map(|j| {
                let ss: f64 = self.samples.iter().map(|s| (s[j] - mean[j]).powi(2)).sum();
                (ss / (n - 1.0)).sqrt()
            })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, DVector::len)
    }
}

struct Walker<'a, M: ?Sized> {
    model: &'a M,
    current: DVector<f64>,
    log_post: f64,
    rng: ChaCha8Rng,
}

impl<M: LossModel + ?Sized> Walker<'_, M> {
    /// One Metropolis step; returns whether the proposal was accepted.
    fn step(&mut self, scale: f64) -> Result<bool> {
        let d = self.current.len();
        let proposal = DVector::from_fn(d, |k, _| {
            self.current[k] + scale * self.rng.sample::<f64, _>(StandardNormal)
        });
        let lp = -self.model.total_loss(&proposal)?;
        let log_u = self.rng.random::<f64>().ln();
        if lp.is_finite() && log_u < lp - self.log_post {
            self.current = proposal;
            self.log_post = lp;
            Ok(true)
        } else {
            Ok(false)
        }
    }
}

fn walker<'a, M: LossModel + ?Sized>(model: &'a M, init: &DVector<f64>, seed: u64) -> Result<Walker<'a, M>> {
    if init.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: init.len(),
        });
    }
    let log_post = -model.total_loss(init)?;
    Ok(Walker {
        model,
        current: init.clone(),
        log_post,
        rng: ChaCha8Rng::seed_from_u64(seed),
    })
}

/// Pilot runs adjusting the proposal scale towards ~0.3 acceptance.
pub fn tune_step_scale<M: LossModel + ?Sized>(model: &M, init: &DVector<f64>, seed: u64) -> Result<f64> {
    let mut w = walker(model, init, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let mut scale = 2.4 / (model.dim() as f64).sqrt() * 0.1;
    for _ in 0..30 {
        let mut accepted = 0;
        let rounds = 500;
        for _ in 0..rounds {
            accepted += w.step(scale)? as usize;
        }
        let rate = accepted as f64 / rounds as f64;
        scale *= ((rate - TARGET_ACCEPTANCE) * 3.0).exp();
    }
    Ok(scale)
}

/// Random-walk Metropolis on `exp(-L(θ))` with isotropic Gaussian proposals.
pub fn mcmc_run<M: LossModel + ?Sized>(model: &M, init: &DVector<f64>, config: &McmcConfig) -> Result<McmcChain> {
    if config.n_samples < 2 || config.thin == 0 {
        return Err(Error::Config("mcmc needs n_samples >= 2 and thin >= 1".into()));
    }
    let step_scale = match config.step_scale {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(s) => return Err(Error::Config(format!("step scale must be positive, got {s}"))),
        None => tune_step_scale(model, init, config.seed)?,
    };
    let mut w = walker(model, init, config.seed)?;
    for _ in 0..config.burn_in {
        w.step(step_scale)?;
    }
    let mut samples = Vec::with_capacity(config.n_samples);
    let mut accepted = 0usize;
    let total = config.n_samples * config.thin;
    for k in 1..=total {
        accepted += w.step(step_scale)? as usize;
        if k % config.thin == 0 {
            samples.push(w.current.clone());
        }
    }
    let acceptance_rate = accepted as f64 / total as f64;
    let mut warnings = Vec::new();
    if !(ACCEPTANCE_BAND.0..=ACCEPTANCE_BAND.1).contains(&acceptance_rate) {
        let msg = format!(
            "mcmc acceptance rate {acceptance_rate:.3} outside [{}, {}] with step scale {step_scale:.4e}; consider retuning",
            ACCEPTANCE_BAND.0, ACCEPTANCE_BAND.1
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(McmcChain {
        samples,
        acceptance_rate,
        step_scale,
        warnings,
    })
}
