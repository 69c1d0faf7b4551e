//! Stopping criteria behind one trait, built by name from configuration.
//!
//! Every criterion sees the same per-iteration record, so any number of them
//! can watch a single training run.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::baselines::{BaselineKind, BaselineStopRule, DEFAULT_PATIENCE};
use crate::criterion::{CredibleValue, Decision, StopController, StopMode};
use crate::experiment::IterationRecord;
use crate::{Error, Result};

pub trait StoppingCriterion {
    fn label(&self) -> &str;

    fn observe(&mut self, record: &IterationRecord, theta: &DVector<f64>) -> Result<Decision>;

    /// Iteration selected so far, `None` while the criterion has not fired.
    fn selected(&self) -> Option<usize>;
}

/// Parameters of one configured criterion. Which fields apply depends on
/// `kind`; the factory rejects the rest.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// gradstop: `deterministic` (default) or `stochastic`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patience: Option<usize>,
}

impl CriterionSpec {
    pub fn new(kind: &str) -> Self {
        Self {
            kind: kind.to_string(),
            ..Self::default()
        }
    }

    pub fn gradstop(threshold: f64) -> Self {
        Self {
            threshold: Some(threshold),
            ..Self::new("gradstop")
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.kind)
    }

    fn allow_only(&self, allowed: &[&str]) -> Result<()> {
        let set = [
            ("mode", self.mode.is_some()),
            ("threshold", self.threshold.is_some()),
            ("seed", self.seed.is_some()),
            ("patience", self.patience.is_some()),
        ];
        for (field, present) in set {
            if present && !allowed.contains(&field) {
                return Err(Error::Config(format!(
                    "criterion `{}` does not take `{field}`",
                    self.label()
                )));
            }
        }
        Ok(())
    }
}

/// Run-level information available to factories.
#[derive(Debug, Clone, Copy)]
pub struct BuildContext {
    pub seed: u64,
}

pub const DEFAULT_THRESHOLD: f64 = 0.1;

pub type Factory = Box<dyn Fn(&CriterionSpec, &BuildContext) -> Result<Box<dyn StoppingCriterion>> + Send + Sync>;

pub struct CriterionRegistry {
    factories: BTreeMap<String, Factory>,
}

impl Default for CriterionRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl CriterionRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    /// `gradstop`, the five gradient baselines, `validation` and `end`.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("gradstop", Box::new(build_gradstop));
        for kind in BaselineKind::ALL {
            r.register(kind.name(), Box::new(move |spec, _| build_baseline(kind, spec)));
        }
        r.register("validation", Box::new(build_validation));
        r.register("end", Box::new(build_end));
        r
    }

    pub fn register(&mut self, kind: &str, factory: Factory) {
        self.factories.insert(kind.to_ascii_lowercase(), factory);
    }

    pub fn kinds(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn contains(&self, kind: &str) -> bool {
        self.factories.contains_key(&kind.to_ascii_lowercase())
    }

    pub fn build(&self, spec: &CriterionSpec, ctx: &BuildContext) -> Result<Box<dyn StoppingCriterion>> {
        let factory = self
            .factories
            .get(&spec.kind.to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownCriterion(spec.kind.clone()))?;
        factory(spec, ctx)
    }
}

struct Gradstop {
    label: String,
    controller: StopController,
}

fn build_gradstop(spec: &CriterionSpec, ctx: &BuildContext) -> Result<Box<dyn StoppingCriterion>> {
    spec.allow_only(&["mode", "threshold", "seed"])?;
    let mode = match spec.mode.as_deref().unwrap_or("deterministic") {
        "deterministic" => {
            if spec.seed.is_some() {
                return Err(Error::Config("deterministic gradstop does not take `seed`".into()));
            }
            StopMode::Deterministic {
                threshold: spec.threshold.unwrap_or(DEFAULT_THRESHOLD),
            }
        }
        "stochastic" => {
            if spec.threshold.is_some() {
                return Err(Error::Config(
                    "stochastic gradstop draws its own level; drop `threshold`".into(),
                ));
            }
            StopMode::Stochastic {
                seed: spec.seed.unwrap_or(ctx.seed),
            }
        }
        other => return Err(Error::Config(format!("unknown gradstop mode `{other}`"))),
    };
    Ok(Box::new(Gradstop {
        label: spec.label().to_string(),
        controller: StopController::new(mode)?,
    }))
}

impl StoppingCriterion for Gradstop {
    fn label(&self) -> &str {
        &self.label
    }

    fn observe(&mut self, record: &IterationRecord, theta: &DVector<f64>) -> Result<Decision> {
        if self.controller.stopped() {
            return Ok(Decision::Stop);
        }
        // missing on a degenerate covariance
        let (Some(s_hat), Some(z)) = (record.s_hat, record.z) else {
            return Ok(Decision::Continue);
        };
        let cv = CredibleValue {
            s_hat,
            z,
            iteration: record.t,
        };
        self.controller.observe(theta, &cv)
    }

    fn selected(&self) -> Option<usize> {
        match self.controller.mode() {
            StopMode::Deterministic { .. } if !self.controller.stopped() => None,
            _ => self.controller.best_iteration(),
        }
    }
}

struct Baseline {
    label: String,
    rule: BaselineStopRule,
    stopped_at: Option<usize>,
}

fn build_baseline(kind: BaselineKind, spec: &CriterionSpec) -> Result<Box<dyn StoppingCriterion>> {
    spec.allow_only(&["patience"])?;
    let patience = spec.patience.unwrap_or(DEFAULT_PATIENCE);
    if patience == 0 {
        return Err(Error::Config("patience must be at least 1".into()));
    }
    Ok(Box::new(Baseline {
        label: spec.label().to_string(),
        rule: BaselineStopRule::with_patience(kind, patience),
        stopped_at: None,
    }))
}

impl StoppingCriterion for Baseline {
    fn label(&self) -> &str {
        &self.label
    }

    fn observe(&mut self, record: &IterationRecord, _theta: &DVector<f64>) -> Result<Decision> {
        if self.stopped_at.is_some() {
            return Ok(Decision::Stop);
        }
        let Some(value) = record.baseline(self.rule.kind()) else {
            return Ok(Decision::Continue);
        };
        let d = self.rule.observe(value);
        if d == Decision::Stop {
            self.stopped_at = Some(record.t);
        }
        Ok(d)
    }

    fn selected(&self) -> Option<usize> {
        self.stopped_at
    }
}

/// Best validation loss over the whole budget, or with `patience`, the
/// iteration of the `patience`-th increase of the validation loss.
struct Validation {
    label: String,
    patience: Option<usize>,
    best: Option<(f64, usize)>,
    prev: Option<f64>,
    increases: usize,
    stopped_at: Option<usize>,
}

fn build_validation(spec: &CriterionSpec, _ctx: &BuildContext) -> Result<Box<dyn StoppingCriterion>> {
    spec.allow_only(&["patience"])?;
    if spec.patience == Some(0) {
        return Err(Error::Config("patience must be at least 1".into()));
    }
    Ok(Box::new(Validation {
        label: spec.label().to_string(),
        patience: spec.patience,
        best: None,
        prev: None,
        increases: 0,
        stopped_at: None,
    }))
}

impl StoppingCriterion for Validation {
    fn label(&self) -> &str {
        &self.label
    }

    fn observe(&mut self, record: &IterationRecord, _theta: &DVector<f64>) -> Result<Decision> {
        let loss = record
            .validation_loss
            .ok_or_else(|| Error::Config("validation criterion needs a validation split".into()))?;
        match self.patience {
            None => {
                if self.best.is_none_or(|(b, _)| loss < b) {
                    self.best = Some((loss, record.t));
                    return Ok(Decision::NewBest);
                }
                Ok(Decision::Continue)
            }
            Some(patience) => {
                if self.stopped_at.is_some() {
                    return Ok(Decision::Stop);
                }
                if self.prev.is_some_and(|p| loss > p) {
                    self.increases += 1;
                }
                self.prev = Some(loss);
                if self.increases >= patience {
                    self.stopped_at = Some(record.t);
                    return Ok(Decision::Stop);
                }
                Ok(Decision::Continue)
            }
        }
    }

    fn selected(&self) -> Option<usize> {
        match self.patience {
            None => self.best.map(|(_, t)| t),
            Some(_) => self.stopped_at,
        }
    }
}

struct End {
    label: String,
    last: Option<usize>,
}

fn build_end(spec: &CriterionSpec, _ctx: &BuildContext) -> Result<Box<dyn StoppingCriterion>> {
    spec.allow_only(&[])?;
    Ok(Box::new(End {
        label: spec.label().to_string(),
        last: None,
    }))
}

impl StoppingCriterion for End {
    fn label(&self) -> &str {
        &self.label
    }

    fn observe(&mut self, record: &IterationRecord, _theta: &DVector<f64>) -> Result<Decision> {
        self.last = Some(record.t);
        Ok(Decision::Continue)
    }

    fn selected(&self) -> Option<usize> {
        self.last
    }
}
