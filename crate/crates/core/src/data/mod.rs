//! Tabular binary-classification data: CSV ingestion, seeded splitting,
//! train-only standardization and a synthetic generator that overfits easily.

mod load;
mod split;
mod synthetic;

use nalgebra::DMatrix;

pub use load::load_csv;
pub use split::{split_standardize, Split, SplitFractions, Standardization};
pub use synthetic::SyntheticSpec;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: DMatrix<f64>,
    pub labels: Vec<u8>,
    pub feature_names: Vec<String>,
    /// Present once the features have been standardized.
    pub standardization: Option<Standardization>,
}

impl Dataset {
    pub fn new(features: DMatrix<f64>, labels: Vec<u8>, feature_names: Vec<String>) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if labels.len() != features.nrows() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                actual: labels.len(),
            });
        }
        if feature_names.len() != features.ncols() {
            return Err(Error::DimensionMismatch {
                expected: features.ncols(),
                actual: feature_names.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::Domain(format!("labels must be 0 or 1, got {bad}")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("features must be finite".into()));
        }
        Ok(Self {
            features,
            labels,
            feature_names,
            standardization: None,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Features and labels of the given rows, in order.
    pub fn rows(&self, idx: &[usize]) -> (DMatrix<f64>, Vec<u8>) {
        let x = self.features.select_rows(idx.iter());
        let y = idx.iter().map(|&i| self.labels[i]).collect();
        (x, y)
    }
}
