use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::{DataSpec, LogisticSpec, ModelSpec, QuadraticSpec, RunConfig};
use super::record::IterationRecord;
use crate::baselines::{stat_cos, stat_eb, stat_gd, stat_gsnr, stat_sign, BaselineKind};
use crate::criterion::{credible_value_scaled, Decision};
use crate::data::{load_csv, split_standardize, SplitFractions};
use crate::models::{log_uniform_spectrum, LogisticModel, LossModel, QuadraticModel};
use crate::numstats::GradientMatrix;
use crate::optim;
use crate::oracle::PosteriorOracle;
use crate::registry::{BuildContext, CriterionRegistry, StoppingCriterion};
use crate::{Error, Result};

const STREAM_START: u64 = 1;
const STREAM_HALVES: u64 = 2;
const STREAM_DATA: u64 = 3;
pub(crate) const STREAM_MCMC: u64 = 4;

/// Independent seed for a named random stream of a run.
pub fn stream_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A model ready to train plus whatever ground truth and held-out data the
/// configuration provides.
pub struct Problem {
    pub model: Box<dyn LossModel>,
    pub theta0: DVector<f64>,
    pub oracle: Option<PosteriorOracle>,
    pub test: Option<LogisticModel>,
    pub validation: Option<LogisticModel>,
    /// Fixed halves of the training rows for gradient disparity.
    pub halves: (Vec<usize>, Vec<usize>),
    pub parameter_names: Vec<String>,
}

pub fn build_problem(config: &RunConfig, seed: u64) -> Result<Problem> {
    let mut problem = match &config.model {
        ModelSpec::Quadratic(q) => quadratic_problem(q, seed)?,
        ModelSpec::Logistic(l) => logistic_problem(l, seed)?,
    };
    let n = problem.model.n_samples();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(stream_seed(seed, STREAM_HALVES)));
    let second = idx.split_off(n / 2);
    problem.halves = (idx, second);
    Ok(problem)
}

fn quadratic_problem(spec: &QuadraticSpec, seed: u64) -> Result<Problem> {
    let spectrum = log_uniform_spectrum(spec.dim, spec.spectrum_min, spec.spectrum_max);
    let model = QuadraticModel::generate(
        &spectrum,
        spec.n_samples,
        &DVector::zeros(spec.dim),
        spec.seed.unwrap_or(seed),
    )?;
    let oracle = PosteriorOracle::from_quadratic(&model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, STREAM_START));
    let offset = DVector::from_fn(spec.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let theta0 = model.theta_star() + offset * spec.offset_scale;
    Ok(Problem {
        model: Box::new(model),
        theta0,
        oracle: Some(oracle),
        test: None,
        validation: None,
        halves: (Vec::new(), Vec::new()),
        parameter_names: (0..spec.dim).map(|j| format!("theta{j}")).collect(),
    })
}

fn logistic_problem(spec: &LogisticSpec, seed: u64) -> Result<Problem> {
    let raw = match &spec.data {
        DataSpec::Csv {
            path,
            label_column,
            positive_label,
        } => load_csv(path, label_column, positive_label.as_deref())?,
        DataSpec::Synthetic(s) => s.generate(stream_seed(seed, STREAM_DATA))?,
    };
    let val = if spec.validation {
        0.2 * (1.0 - spec.test_fraction)
    } else {
        0.0
    };
    let fractions = SplitFractions {
        train: 1.0 - spec.test_fraction - val,
        val,
        test: spec.test_fraction,
    };
    let (split, ds) = split_standardize(&raw, fractions, seed)?;
    let (x, y) = ds.rows(&split.train_idx);
    let model = LogisticModel::new(&x, &y, spec.prior_precision)?;
    let held_out = |idx: &[usize]| -> Result<Option<LogisticModel>> {
        if idx.is_empty() {
            return Ok(None);
        }
        let (x, y) = ds.rows(idx);
        LogisticModel::new(&x, &y, 0.0).map(Some)
    };
    let mut names = ds.feature_names.clone();
    names.push("bias".into());
    Ok(Problem {
        theta0: DVector::zeros(model.dim()),
        model: Box::new(model),
        oracle: None,
        test: held_out(&split.test_idx)?,
        validation: held_out(&split.val_idx)?,
        halves: (Vec::new(), Vec::new()),
        parameter_names: names,
    })
}

impl Problem {
    /// All trace statistics at θ_t given its per-sample gradients.
    pub fn record(
        &self,
        t: usize,
        theta: &DVector<f64>,
        grads: &GradientMatrix,
        kappa: f64,
    ) -> Result<IterationRecord> {
        let mut r = IterationRecord {
            t,
            train_loss: self.model.total_loss(theta)? / self.model.n_samples() as f64,
            ..IterationRecord::default()
        };
        match credible_value_scaled(grads, t, kappa) {
            Ok(cv) => {
                r.z = Some(cv.z);
                r.s_hat = Some(cv.s_hat);
            }
            Err(Error::DegenerateCovariance) => r.degenerate = true,
            Err(e) => return Err(e),
        }
        if let Some(o) = &self.oracle {
            r.exact_s = Some(o.exact_credibility(theta)?);
        }
        if let Some(m) = &self.test {
            r.test_loss = Some(m.data_loss(theta)?);
            r.test_accuracy = Some(m.accuracy(theta)?);
        }
        if let Some(m) = &self.validation {
            r.validation_loss = Some(m.data_loss(theta)?);
        }
        r.set_baseline(BaselineKind::Eb, stat_eb(grads));
        r.set_baseline(BaselineKind::Gsnr, stat_gsnr(grads));
        r.set_baseline(BaselineKind::Sign, stat_sign(grads));
        r.set_baseline(BaselineKind::Cos, stat_cos(grads));
        let (a, b) = &self.halves;
        if a.len() >= 2 && b.len() >= 2 {
            r.set_baseline(
                BaselineKind::Gd,
                stat_gd(&grads.select_rows(a)?, &grads.select_rows(b)?)?,
            );
        }
        Ok(r)
    }
}

/// Where a criterion landed in one run. Criteria that never fired fall back
/// to the last iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub criterion: String,
    pub seed: u64,
    pub iteration: usize,
    pub fired: bool,
    pub record: IterationRecord,
}

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub labels: Vec<String>,
    pub trace: Vec<IterationRecord>,
    /// `decisions[t - 1][k]` for criterion `k`.
    pub decisions: Vec<Vec<Decision>>,
    pub outcomes: Vec<Outcome>,
    pub final_theta: DVector<f64>,
}

/// Trains once for `seed`, observing every configured criterion.
pub fn run_seed(config: &RunConfig, registry: &CriterionRegistry, seed: u64) -> Result<SeedRun> {
    let problem = build_problem(config, seed)?;
    let ctx = BuildContext { seed };
    let mut criteria: Vec<Box<dyn StoppingCriterion>> = config
        .criteria()
        .iter()
        .map(|spec| registry.build(spec, &ctx))
        .collect::<Result<_>>()?;
    let labels: Vec<String> = criteria.iter().map(|c| c.label().to_string()).collect();
    let mut trace = Vec::with_capacity(config.budget);
    let mut decisions = Vec::with_capacity(config.budget);
    let mut observer = |t: usize, theta: &DVector<f64>, grads: &GradientMatrix| -> Result<()> {
        let record = problem.record(t, theta, grads, config.kappa)?;
        let row = criteria
            .iter_mut()
            .map(|c| c.observe(&record, theta))
            .collect::<Result<Vec<_>>>()?;
        trace.push(record);
        decisions.push(row);
        Ok(())
    };
    let state = optim::run(
        problem.model.as_ref(),
        &config.optimizer,
        problem.theta0.clone(),
        config.budget,
        &mut observer,
    )?;
    let outcomes = criteria
        .iter()
        .map(|c| {
            let (iteration, fired) = match c.selected() {
                Some(t) => (t, true),
                None => (trace.len(), false),
            };
            Outcome {
                criterion: c.label().to_string(),
                seed,
                iteration,
                fired,
                record: trace[iteration - 1].clone(),
            }
        })
        .collect();
    Ok(SeedRun {
        seed,
        labels,
        trace,
        decisions,
        outcomes,
        final_theta: state.theta,
    })
}
