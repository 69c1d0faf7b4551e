use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::CredibleValue;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum StopMode {
    /// Draw the target level once, scan the whole budget, keep the closest.
    Stochastic { seed: u64 },
    /// Stop at the first iteration whose credible value reaches the threshold.
    Deterministic { threshold: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Continue,
    NewBest,
    Stop,
}

/// Tracks the best-so-far parameter copy for one training run.
#[derive(Debug, Clone)]
pub struct StopController {
    mode: StopMode,
    u: f64,
    best_s: Option<f64>,
    best_theta: Option<DVector<f64>>,
    best_iteration: Option<usize>,
    stopped: bool,
}

impl StopController {
    pub fn new(mode: StopMode) -> Result<Self> {
        let u = match mode {
            StopMode::Stochastic { seed } => ChaCha8Rng::seed_from_u64(seed).random::<f64>(),
            StopMode::Deterministic { threshold } => {
                if !(0.0..=1.0).contains(&threshold) {
                    return Err(Error::Domain(format!("threshold must lie in [0, 1], got {threshold}")));
                }
                threshold
            }
        };
        Ok(Self {
            mode,
            u,
            best_s: None,
            best_theta: None,
            best_iteration: None,
            stopped: false,
        })
    }

    pub fn mode(&self) -> StopMode {
        self.mode
    }

    /// Target credibility level.
    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn best_s(&self) -> Option<f64> {
        self.best_s
    }

    pub fn best_theta(&self) -> Option<&DVector<f64>> {
        self.best_theta.as_ref()
    }

    pub fn best_iteration(&self) -> Option<usize> {
        self.best_iteration
    }

    pub fn stopped(&self) -> bool {
        self.stopped
    }

    pub fn observe(&mut self, theta: &DVector<f64>, s: &CredibleValue) -> Result<Decision> {
        if self.stopped {
            return Err(Error::ControllerStopped(self.best_iteration.unwrap_or_default()));
        }
        match self.mode {
            StopMode::Stochastic { .. } => {
                // strict: ties keep the earlier iteration
                let better = self
                    .best_s
                    .is_none_or(|best| (s.s_hat - self.u).abs() < (best - self.u).abs());
                if better {
                    self.keep(theta, s);
                    Ok(Decision::NewBest)
                } else {
                    Ok(Decision::Continue)
                }
            }
            StopMode::Deterministic { .. } => {
                if s.s_hat >= self.u {
                    self.keep(theta, s);
                    self.stopped = true;
                    Ok(Decision::Stop)
                } else {
                    Ok(Decision::Continue)
                }
            }
        }
    }

    fn keep(&mut self, theta: &DVector<f64>, s: &CredibleValue) {
        match &mut self.best_theta {
            Some(copy) if copy.len() == theta.len() => copy.copy_from(theta),
            slot => *slot = Some(theta.clone()),
        }
        self.best_s = Some(s.s_hat);
        self.best_iteration = Some(s.iteration);
    }
}
