use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::DMatrix;

use super::Dataset;
use crate::{Error, Result};

/// Reads a comma-separated file with a header row. Every column other than
/// `label_column` is a numeric feature. Rows with a missing or unparseable
/// field are dropped.
///
/// Labels map to 1 when equal to `positive_label`. Without it, labels must be
/// numeric 0/1, or the larger of two distinct values is taken as positive.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str, positive_label: Option<&str>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingColumn(label_column.to_string()))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_idx)
        .map(|(_, h)| h.to_string())
        .collect();
    let p = feature_names.len();

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(_) => {
                dropped += 1;
                continue;
            }
        };
        if record.len() != headers.len() {
            dropped += 1;
            continue;
        }
        let row: Option<Vec<f64>> = record
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != label_idx)
            .map(|(_, f)| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        let label = &record[label_idx];
        match row {
            Some(row) if !label.is_empty() => {
                values.extend(row);
                raw_labels.push(label.to_string());
            }
            _ => dropped += 1,
        }
    }
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} malformed rows", path.display());
    }
    if raw_labels.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let labels = map_labels(&raw_labels, positive_label)?;
    let features = DMatrix::from_row_slice(raw_labels.len(), p, &values);
    Dataset::new(features, labels, feature_names)
}

fn map_labels(raw: &[String], positive_label: Option<&str>) -> Result<Vec<u8>> {
    let distinct: BTreeSet<&str> = raw.iter().map(String::as_str).collect();
    if distinct.len() > 2 {
        return Err(Error::NonBinaryLabels(distinct.len()));
    }
    let positive = match positive_label {
        Some(p) => p.to_string(),
        None => {
            let numeric: Option<Vec<f64>> = distinct.iter().map(|s| s.parse::<f64>().ok()).collect();
            match numeric {
                Some(v) if v.iter().all(|&x| x == 0.0 || x == 1.0) => {
                    return Ok(raw
                        .iter()
                        .map(|s| (s.parse::<f64>().unwrap_or(0.0) == 1.0) as u8)
                        .collect());
                }
                Some(v) => {
                    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    distinct
                        .iter()
                        .find(|s| s.parse::<f64>().ok() == Some(max))
                        .map(|s| s.to_string())
                        .unwrap_or_default()
                }
                None => distinct.iter().next_back().map(|s| s.to_string()).unwrap_or_default(),
            }
        }
    };
    Ok(raw.iter().map(|s| (*s == positive) as u8).collect())
}
