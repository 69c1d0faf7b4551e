//! Experiment harness: configuration, one training run observed by every
//! configured criterion, and the `run`, `sweep` and `uncertainty` reports.

mod commands;
mod config;
mod output;
mod record;
mod runner;

pub use commands::{
    cmd_run, cmd_sweep, cmd_uncertainty, run_seeds, sweep_criteria, uncertainty_report, UncertaintyReport,
    UncertaintyRow,
};
pub use config::{DataSpec, LogisticSpec, ModelSpec, QuadraticSpec, RunConfig};
pub use output::{aggregate, Aggregate, RunSummary, Stats, SUMMARY_COLUMNS};
pub use record::{IterationRecord, TRACE_COLUMNS};
pub use runner::{build_problem, run_seed, stream_seed, Outcome, Problem, SeedRun};
