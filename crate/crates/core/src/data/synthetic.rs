use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::models::sigmoid;
use crate::{Error, Result};

/// Logistic data with a few informative features and many noisy, partially
/// redundant ones. With few rows and no regularization a fitted model
/// overfits within a few thousand iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    #[serde(default = "default_rows")]
    pub n_rows: usize,
    #[serde(default = "default_informative")]
    pub informative: usize,
    /// Columns mixing the informative features with independent noise.
    #[serde(default = "default_noise")]
    pub noise: usize,
    /// Weight of the informative mix in each noise column.
    #[serde(default = "default_mix")]
    pub mix: f64,
}

fn default_rows() -> usize {
    125
}
fn default_informative() -> usize {
    5
}
fn default_noise() -> usize {
    34
}
fn default_mix() -> f64 {
    0.5
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_rows: default_rows(),
            informative: default_informative(),
            noise: default_noise(),
            mix: default_mix(),
        }
    }
}

impl SyntheticSpec {
    pub fn generate(&self, seed: u64) -> Result<Dataset> {
        if self.n_rows == 0 || self.informative == 0 {
            return Err(Error::Config(
                "synthetic data needs rows and informative features".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal));
        let (n, k, m) = (self.n_rows, self.informative, self.noise);
        let xi = normal(n, k);
        let w = DVector::from_column_slice(normal(k, 1).as_slice());
        let redundant = &xi * normal(k, m) * self.mix + normal(n, m);
        let mut features = DMatrix::zeros(n, k + m);
        features.columns_mut(0, k).copy_from(&xi);
        features.columns_mut(k, m).copy_from(&redundant);
        let logits = &xi * w;
        let labels = logits
            .iter()
            .map(|&a| (rng.random::<f64>() < sigmoid(a)) as u8)
            .collect();
        let names = (0..k)
            .map(|j| format!("x{j}"))
            .chain((0..m).map(|j| format!("noise{j}")))
            .collect();
        Dataset::new(features, labels, names)
    }
}
