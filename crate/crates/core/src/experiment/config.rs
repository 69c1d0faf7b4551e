use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineKind;
use crate::data::SyntheticSpec;
use crate::optim::OptimizerSpec;
use crate::oracle::McmcConfig;
use crate::registry::{BuildContext, CriterionRegistry, CriterionSpec, DEFAULT_THRESHOLD};
use crate::{Error, Result};

/// Everything needed to reproduce a run; written next to the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// First seed; runs use `seed, seed + 1, ..`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub seeds: usize,
    pub budget: usize,
    /// Loss scale: the loss is taken as `1/κ` times the negative log-posterior.
    #[serde(default = "unit")]
    pub kappa: f64,
    pub model: ModelSpec,
    pub optimizer: OptimizerSpec,
    /// Defaults to every built-in criterion applicable to the model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criteria: Option<Vec<CriterionSpec>>,
    #[serde(default)]
    pub mcmc: McmcConfig,
}

fn one() -> usize {
    1
}
fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Quadratic(QuadraticSpec),
    Logistic(LogisticSpec),
}

/// Rotated quadratic with a log-uniform curvature spectrum; training starts
/// at `θ* + offset_scale · N(0, I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSpec {
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_n")]
    pub n_samples: usize,
    #[serde(default = "default_spectrum_min")]
    pub spectrum_min: f64,
    #[serde(default = "default_spectrum_max")]
    pub spectrum_max: f64,
    #[serde(default = "default_offset")]
    pub offset_scale: f64,
    /// Fixes the problem across seeds; otherwise each seed draws its own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_dim() -> usize {
    50
}
fn default_n() -> usize {
    200
}
fn default_spectrum_min() -> f64 {
    0.1
}
fn default_spectrum_max() -> f64 {
    10.0
}
fn default_offset() -> f64 {
    3.0
}

impl Default for QuadraticSpec {
    fn default() -> Self {
        Self {
            dim: default_dim(),
            n_samples: default_n(),
            spectrum_min: default_spectrum_min(),
            spectrum_max: default_spectrum_max(),
            offset_scale: default_offset(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogisticSpec {
    /// Gaussian prior precision λ on all weights.
    #[serde(default = "default_prior")]
    pub prior_precision: f64,
    /// Hold out a validation split for the validation-loss criterion.
    #[serde(default = "yes")]
    pub validation: bool,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    pub data: DataSpec,
}

fn default_prior() -> f64 {
    1e-4
}
fn yes() -> bool {
    true
}
fn default_test_fraction() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DataSpec {
    Csv {
        path: PathBuf,
        #[serde(default = "default_label_column")]
        label_column: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        positive_label: Option<String>,
    },
    Synthetic(SyntheticSpec),
}

fn default_label_column() -> String {
    "label".into()
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn has_validation(&self) -> bool {
        matches!(&self.model, ModelSpec::Logistic(l) if l.validation)
    }

    /// Configured criteria, or the defaults for this model.
    pub fn criteria(&self) -> Vec<CriterionSpec> {
        if let Some(c) = &self.criteria {
            return c.clone();
        }
        let mut out = vec![CriterionSpec::gradstop(DEFAULT_THRESHOLD)];
        out.extend(BaselineKind::ALL.iter().map(|k| CriterionSpec::new(k.name())));
        if self.has_validation() {
            out.push(CriterionSpec::new("validation"));
        }
        out.push(CriterionSpec::new("end"));
        out
    }

    pub fn validate(&self, registry: &CriterionRegistry) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Config("budget must be at least 1".into()));
        }
        if self.seeds == 0 {
            return Err(Error::Config("seeds must be at least 1".into()));
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::Config(format!("kappa must be positive, got {}", self.kappa)));
        }
        self.optimizer.validate()?;
        match &self.model {
            ModelSpec::Quadratic(q) => {
                if q.dim == 0 || q.n_samples < 2 {
                    return Err(Error::Config(
                        "quadratic model needs dim >= 1 and n_samples >= 2".into(),
                    ));
                }
                if !(q.spectrum_min > 0.0) || !(q.spectrum_max >= q.spectrum_min) || !q.spectrum_max.is_finite() {
                    return Err(Error::Config("spectrum bounds must satisfy 0 < min <= max".into()));
                }
                if !(q.offset_scale >= 0.0) || !q.offset_scale.is_finite() {
                    return Err(Error::Config("offset_scale must be non-negative".into()));
                }
            }
            ModelSpec::Logistic(l) => {
                if !(l.prior_precision >= 0.0) || !l.prior_precision.is_finite() {
                    return Err(Error::Config("prior_precision must be non-negative".into()));
                }
                if !(0.0..1.0).contains(&l.test_fraction) {
                    return Err(Error::Config("test_fraction must lie in [0, 1)".into()));
                }
            }
        }
        let criteria = self.criteria();
        if criteria.is_empty() {
            return Err(Error::Config("no criteria configured".into()));
        }
        let mut labels = BTreeSet::new();
        for spec in &criteria {
            if !labels.insert(spec.label().to_string()) {
                return Err(Error::Config(format!("duplicate criterion label `{}`", spec.label())));
            }
            if spec.kind.eq_ignore_ascii_case("validation") && !self.has_validation() {
                return Err(Error::Config(
                    "validation criterion needs a logistic model with validation = true".into(),
                ));
            }
            registry.build(spec, &BuildContext { seed: self.seed })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOGISTIC: &str = r#"
seed = 3
seeds = 2
budget = 100

[model]
kind = "logistic"
prior_precision = 0.01

[model.data]
source = "synthetic"
n_rows = 60

[optimizer]
kind = "adam"
learning_rate = 0.1

[[criteria]]
kind = "gradstop"
threshold = 0.2

[[criteria]]
kind = "validation"
"#;

    #[test]
    fn parse_logistic() {
        let c = RunConfig::from_toml_str(LOGISTIC).unwrap();
        assert_eq!(c.seeds, 2);
        assert_eq!(c.kappa, 1.0);
        let ModelSpec::Logistic(l) = &c.model else { panic!() };
        assert!(l.validation);
        assert_eq!(
            l.data,
            DataSpec::Synthetic(SyntheticSpec {
                n_rows: 60,
                ..SyntheticSpec::default()
            })
        );
        assert_eq!(c.optimizer.learning_rate(), 0.1);
        assert_eq!(c.criteria().len(), 2);
        c.validate(&CriterionRegistry::with_builtins()).unwrap();
    }

    #[test]
    fn toml_roundtrip() {
        let c = RunConfig::from_toml_str(LOGISTIC).unwrap();
        let back = RunConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn quadratic_defaults() {
        let c = RunConfig::from_toml_str(
            "budget = 10\n[model]\nkind = \"quadratic\"\n[optimizer]\nkind = \"gd\"\nlearning_rate = 0.01\n",
        )
        .unwrap();
        assert_eq!(c.model, ModelSpec::Quadratic(QuadraticSpec::default()));
        let labels: Vec<_> = c.criteria().iter().map(|s| s.label().to_string()).collect();
        assert_eq!(labels, ["gradstop", "eb", "gsnr", "sign", "cos", "gd", "end"]);
        c.validate(&CriterionRegistry::with_builtins()).unwrap();
    }

    #[test]
    fn zero_budget_rejected() {
        let mut c = RunConfig::from_toml_str(LOGISTIC).unwrap();
        c.budget = 0;
        assert!(matches!(
            c.validate(&CriterionRegistry::with_builtins()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn validation_needs_split() {
        let mut c = RunConfig::from_toml_str(LOGISTIC).unwrap();
        if let ModelSpec::Logistic(l) = &mut c.model {
            l.validation = false;
        }
        assert!(c.validate(&CriterionRegistry::with_builtins()).is_err());
    }

    #[test]
    fn duplicate_labels_rejected() {
        let mut c = RunConfig::from_toml_str(LOGISTIC).unwrap();
        c.criteria = Some(vec![CriterionSpec::gradstop(0.1), CriterionSpec::gradstop(0.2)]);
        assert!(c.validate(&CriterionRegistry::with_builtins()).is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(RunConfig::from_toml_str(&format!("{LOGISTIC}\nbogus = 1\n")).is_err());
        let bad = LOGISTIC.replace("n_rows = 60", "n_rows = 60\nrows = 3");
        assert!(RunConfig::from_toml_str(&bad).is_err());
    }
}
