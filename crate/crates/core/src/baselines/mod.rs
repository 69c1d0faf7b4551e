//! Comparison stopping statistics computed from the same per-sample
//! gradients, each paired with its counting stop rule.
//!
//! * EB: `1 - (n/d) Σ_k ḡ_k² / (Σ_kk + τ)`, stops once positive.
//! * GSNR: `(1/d) Σ_k ḡ_k² / (Σ_kk + τ)`, stops on the fifth decrease.
//! * sign / cos: mean pairwise sign / cosine of `g_iᵀ g_j`, fifth decrease.
//! * GD: `‖ḡ_A - ḡ_B‖` between two fixed halves of the samples, fifth increase.

mod rules;
mod stats;

pub use rules::{BaselineStopRule, DEFAULT_PATIENCE};
pub use stats::{stat_cos, stat_eb, stat_gd, stat_gsnr, stat_sign, VARIANCE_FLOOR};

use std::fmt;
use std::str::FromStr;

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Eb,
    Gsnr,
    Sign,
    Cos,
    Gd,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 5] = [
        BaselineKind::Eb,
        BaselineKind::Gsnr,
        BaselineKind::Sign,
        BaselineKind::Cos,
        BaselineKind::Gd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Eb => "eb",
            BaselineKind::Gsnr => "gsnr",
            BaselineKind::Sign => "sign",
            BaselineKind::Cos => "cos",
            BaselineKind::Gd => "gd",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownCriterion(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineStat {
    pub kind: BaselineKind,
    pub value: f64,
    pub iteration: usize,
}
