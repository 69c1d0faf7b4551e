//! Full-batch optimizers and the training loop that feeds observers.
//!
//! Each iteration computes the per-sample gradient matrix once; observers
//! see it read-only together with θ_t, then the optimizer steps on the sum
//! of the rows.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::models::LossModel;
use crate::numstats::GradientMatrix;
use crate::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub theta: DVector<f64>,
    pub step_count: usize,
    pub adam_m: DVector<f64>,
    pub adam_v: DVector<f64>,
}

impl OptimizerState {
    pub fn new(theta: DVector<f64>) -> Self {
        let d = theta.len();
        Self {
            theta,
            step_count: 0,
            adam_m: DVector::zeros(d),
            adam_v: DVector::zeros(d),
        }
    }
}

/// `θ ← θ - lr ∇L`
pub fn gd_step(state: &mut OptimizerState, total_gradient: &DVector<f64>, lr: f64) {
    state.theta.axpy(-lr, total_gradient, 1.0);
    state.step_count += 1;
}

/// Bias-corrected Adam.
pub fn adam_step(state: &mut OptimizerState, total_gradient: &DVector<f64>, hyper: &AdamHyper) {
    state.step_count += 1;
    let t = state.step_count as i32;
    let c1 = 1.0 - hyper.beta1.powi(t);
    let c2 = 1.0 - hyper.beta2.powi(t);
    for k in 0..state.theta.len() {
        let g = total_gradient[k];
        let m = hyper.beta1 * state.adam_m[k] + (1.0 - hyper.beta1) * g;
        let v = hyper.beta2 * state.adam_v[k] + (1.0 - hyper.beta2) * g * g;
        state.adam_m[k] = m;
        state.adam_v[k] = v;
        state.theta[k] -= hyper.learning_rate * (m / c1) / ((v / c2).sqrt() + hyper.eps);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamHyper {
    pub learning_rate: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_beta1() -> f64 {
    ADAM_BETA1
}
fn default_beta2() -> f64 {
    ADAM_BETA2
}
fn default_eps() -> f64 {
    ADAM_EPS
}

impl AdamHyper {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            eps: ADAM_EPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerSpec {
    Gd { learning_rate: f64 },
    Adam(AdamHyper),
}

impl OptimizerSpec {
    pub fn learning_rate(&self) -> f64 {
        match self {
            OptimizerSpec::Gd { learning_rate } => *learning_rate,
            OptimizerSpec::Adam(h) => h.learning_rate,
        }
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        match self {
            OptimizerSpec::Gd { learning_rate } => *learning_rate = lr,
            OptimizerSpec::Adam(h) => h.learning_rate = lr,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lr = self.learning_rate();
        if !(lr > 0.0) || !lr.is_finite() {
            return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
        }
        if let OptimizerSpec::Adam(h) = self {
            if !(0.0..1.0).contains(&h.beta1) || !(0.0..1.0).contains(&h.beta2) || !(h.eps > 0.0) {
                return Err(Error::Config("adam betas must lie in [0, 1) and eps > 0".into()));
            }
        }
        Ok(())
    }

    pub fn step(&self, state: &mut OptimizerState, total_gradient: &DVector<f64>) {
        match self {
            OptimizerSpec::Gd { learning_rate } => gd_step(state, total_gradient, *learning_rate),
            OptimizerSpec::Adam(h) => adam_step(state, total_gradient, h),
        }
    }
}

/// Receives `(t, θ_t, G_t)` before the optimizer moves past θ_t.
pub trait Observer {
    fn observe(&mut self, t: usize, theta: &DVector<f64>, grads: &GradientMatrix) -> Result<()>;
}

impl<F> Observer for F
where
    F: FnMut(usize, &DVector<f64>, &GradientMatrix) -> Result<()>,
{
    fn observe(&mut self, t: usize, theta: &DVector<f64>, grads: &GradientMatrix) -> Result<()> {
        self(t, theta, grads)
    }
}

/// Runs `budget` iterations, `t = 1..=budget`, and returns the final state
/// (after the last step).
pub fn run<M, O>(
    model: &M,
    optimizer: &OptimizerSpec,
    theta0: DVector<f64>,
    budget: usize,
    observer: &mut O,
) -> Result<OptimizerState>
where
    M: LossModel + ?Sized,
    O: Observer + ?Sized,
{
    if budget == 0 {
        return Err(Error::Config("budget must be at least 1".into()));
    }
    optimizer.validate()?;
    if theta0.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: theta0.len(),
        });
    }
    let mut state = OptimizerState::new(theta0);
    for t in 1..=budget {
        let grads = model.sample_gradients(&state.theta)?;
        observer.observe(t, &state.theta, &grads)?;
        let total = grads.total();
        optimizer.step(&mut state, &total);
    }
    Ok(state)
}
