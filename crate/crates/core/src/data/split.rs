use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::{Error, Result};

const TEST_FRACTION: f64 = 0.2;
const VALIDATION_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl SplitFractions {
    /// 20% test; with validation, another 20% of the remainder.
    pub fn protocol(validation: bool) -> Self {
        let val = if validation {
            VALIDATION_FRACTION * (1.0 - TEST_FRACTION)
        } else {
            0.0
        };
        Self {
            train: 1.0 - TEST_FRACTION - val,
            val,
            test: TEST_FRACTION,
        }
    }

    fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::InvalidSplit(format!("fractions must lie in [0, 1]: {self:?}")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSplit(format!("fractions must sum to 1: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    pub seed: u64,
    pub fractions: SplitFractions,
}

/// Per-column affine map fitted on training rows. A zero `std` marks a
/// constant column, which maps to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    /// Population mean and standard deviation of the selected rows.
    pub fn fit(features: &DMatrix<f64>, rows: &[usize]) -> Self {
        let n = rows.len() as f64;
        let p = features.ncols();
        let mut mean = vec![0.0; p];
        let mut std = vec![0.0; p];
        for j in 0..p {
            let m = rows.iter().map(|&i| features[(i, j)]).sum::<f64>() / n;
            let var = rows.iter().map(|&i| (features[(i, j)] - m).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            mean[j] = m;
            // roundoff on a constant column
            std[j] = if sd > 1e-12 * m.abs().max(1.0) { sd } else { 0.0 };
        }
        Self { mean, std }
    }

    pub fn apply(&self, features: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = features.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            let (m, s) = (self.mean[j], self.std[j]);
            if s > 0.0 {
                col.apply(|v| *v = (*v - m) / s);
            } else {
                col.fill(0.0);
            }
        }
        out
    }
}

fn count(fraction: f64, n: usize) -> usize {
    (fraction * n as f64).round() as usize
}

/// Seeded shuffle into test, validation and training rows (taken in that
/// order), then standardization fitted on the training rows only.
pub fn split_standardize(ds: &Dataset, fractions: SplitFractions, seed: u64) -> Result<(Split, Dataset)> {
    fractions.validate()?;
    let n = ds.n_rows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = count(fractions.test, n);
    let n_val = count(fractions.val, n);
    if n_test + n_val + 2 > n {
        return Err(Error::InvalidSplit(format!(
            "{n} rows leave fewer than 2 training rows after {n_test} test and {n_val} validation rows"
        )));
    }
    let test_idx = idx[..n_test].to_vec();
    let val_idx = idx[n_test..n_test + n_val].to_vec();
    let train_idx = idx[n_test + n_val..].to_vec();

    let standardization = Standardization::fit(&ds.features, &train_idx);
    let standardized = Dataset {
        features: standardization.apply(&ds.features),
        labels: ds.labels.clone(),
        feature_names: ds.feature_names.clone(),
        standardization: Some(standardization),
    };
    let split = Split {
        train_idx,
        val_idx,
        test_idx,
        seed,
        fractions,
    };
    Ok((split, standardized))
}
