use std::fs;
use std::path::Path;

use serde::Serialize;

use super::config::RunConfig;
use super::record::{fmt_f64, fmt_opt, TRACE_COLUMNS};
use super::runner::{Outcome, SeedRun};
use crate::criterion::Decision;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub count: usize,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self {
            mean,
            std,
            count: values.len(),
        })
    }
}

/// Per-criterion statistics over seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub criterion: String,
    pub runs: usize,
    pub fired: usize,
    pub iteration: Option<Stats>,
    pub train_loss: Option<Stats>,
    pub test_loss: Option<Stats>,
    pub test_accuracy: Option<Stats>,
    pub exact_s: Option<Stats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub aggregates: Vec<Aggregate>,
    #[serde(skip)]
    pub outcomes: Vec<Outcome>,
}

impl RunSummary {
    pub fn get(&self, criterion: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.criterion == criterion)
    }
}

/// Groups outcomes by criterion, keeping first-appearance order.
pub fn aggregate(outcomes: &[Outcome]) -> Vec<Aggregate> {
    let mut order: Vec<&str> = Vec::new();
    for o in outcomes {
        if !order.contains(&o.criterion.as_str()) {
            order.push(&o.criterion);
        }
    }
    order
        .into_iter()
        .map(|label| {
            let group: Vec<&Outcome> = outcomes.iter().filter(|o| o.criterion == label).collect();
            let collect =
                |f: &dyn Fn(&Outcome) -> Option<f64>| Stats::of(&group.iter().filter_map(|o| f(o)).collect::<Vec<_>>());
            Aggregate {
                criterion: label.to_string(),
                runs: group.len(),
                fired: group.iter().filter(|o| o.fired).count(),
                iteration: collect(&|o| Some(o.iteration as f64)),
                train_loss: collect(&|o| Some(o.record.train_loss)),
                test_loss: collect(&|o| o.record.test_loss),
                test_accuracy: collect(&|o| o.record.test_accuracy),
                exact_s: collect(&|o| o.record.exact_s),
            }
        })
        .collect()
}

fn decision_name(d: Decision) -> &'static str {
    match d {
        Decision::Continue => "continue",
        Decision::NewBest => "best",
        Decision::Stop => "stop",
    }
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

pub(crate) fn write_trace(path: &Path, runs: &[SeedRun]) -> Result<()> {
    let mut w = writer(path)?;
    let labels = runs.first().map(|r| r.labels.clone()).unwrap_or_default();
    let header: Vec<String> = TRACE_COLUMNS
        .iter()
        .map(|c| c.to_string())
        .chain(labels.iter().map(|l| format!("criterion:{l}")))
        .collect();
    w.write_record(&header)?;
    for run in runs {
        for (record, decisions) in run.trace.iter().zip(&run.decisions) {
            let mut row = record.csv_fields(run.seed);
            row.extend(decisions.iter().map(|&d| decision_name(d).to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub const SUMMARY_COLUMNS: [&str; 10] = [
    "criterion",
    "seed",
    "iteration",
    "fired",
    "train_loss",
    "test_loss",
    "test_accuracy",
    "validation_loss",
    "s_hat",
    "exact_s",
];

pub(crate) fn write_summary_csv(path: &Path, outcomes: &[Outcome]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SUMMARY_COLUMNS)?;
    for o in outcomes {
        let r = &o.record;
        w.write_record([
            o.criterion.clone(),
            o.seed.to_string(),
            o.iteration.to_string(),
            o.fired.to_string(),
            fmt_f64(r.train_loss),
            fmt_opt(r.test_loss),
            fmt_opt(r.test_accuracy),
            fmt_opt(r.validation_loss),
            fmt_opt(r.s_hat),
            fmt_opt(r.exact_s),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_config(dir: &Path, config: &RunConfig) -> Result<()> {
    let path = dir.join("config.toml");
    fs::write(&path, config.to_toml_string()?).map_err(|e| Error::io(&path, e))
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::IterationRecord;

    fn outcome(label: &str, seed: u64, loss: f64) -> Outcome {
        Outcome {
            criterion: label.into(),
            seed,
            iteration: 3,
            fired: seed.is_multiple_of(2),
            record: IterationRecord {
                t: 3,
                train_loss: 1.0,
                test_loss: Some(loss),
                ..IterationRecord::default()
            },
        }
    }

    #[test]
    fn stats_sample_std() {
        let s = Stats::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(Stats::of(&[7.0]).unwrap().std, 0.0);
        assert!(Stats::of(&[]).is_none());
    }

    #[test]
    fn aggregate_groups_in_order() {
        let outs = [outcome("b", 0, 1.0), outcome("a", 0, 2.0), outcome("b", 1, 3.0)];
        let agg = aggregate(&outs);
        assert_eq!(agg.len(), 2);
        assert_eq!(agg[0].criterion, "b");
        assert_eq!(agg[0].runs, 2);
        assert_eq!(agg[0].fired, 1);
        assert_eq!(agg[0].test_loss.unwrap().mean, 2.0);
        assert!(agg[0].exact_s.is_none());
    }
}
