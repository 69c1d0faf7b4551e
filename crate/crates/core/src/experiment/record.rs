use crate::baselines::BaselineKind;

/// Statistics of one iteration, taken at θ_t before the optimizer step.
/// Absent values are empty cells in the trace.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationRecord {
    pub t: usize,
    /// Training objective divided by the number of training samples.
    pub train_loss: f64,
    pub test_loss: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub validation_loss: Option<f64>,
    pub z: Option<f64>,
    pub s_hat: Option<f64>,
    /// Set when the gradient covariance vanished and ŝ is undefined.
    pub degenerate: bool,
    pub exact_s: Option<f64>,
    pub eb: Option<f64>,
    pub gsnr: Option<f64>,
    pub sign: Option<f64>,
    pub cos: Option<f64>,
    pub gd: Option<f64>,
}

/// Fixed leading columns of `trace.csv`; one decision column per criterion
/// follows. Rows of all seeds are concatenated.
pub const TRACE_COLUMNS: [&str; 15] = [
    "seed",
    "t",
    "train_loss",
    "test_loss",
    "test_accuracy",
    "validation_loss",
    "z",
    "s_hat",
    "degenerate",
    "exact_s",
    "eb",
    "gsnr",
    "sign",
    "cos",
    "gd",
];

pub(crate) fn fmt_f64(v: f64) -> String {
    // shortest representation that round-trips
    format!("{v:?}")
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

impl IterationRecord {
    pub fn baseline(&self, kind: BaselineKind) -> Option<f64> {
        match kind {
            BaselineKind::Eb => self.eb,
            BaselineKind::Gsnr => self.gsnr,
            BaselineKind::Sign => self.sign,
            BaselineKind::Cos => self.cos,
            BaselineKind::Gd => self.gd,
        }
    }

    pub(crate) fn set_baseline(&mut self, kind: BaselineKind, value: f64) {
        let slot = match kind {
            BaselineKind::Eb => &mut self.eb,
            BaselineKind::Gsnr => &mut self.gsnr,
            BaselineKind::Sign => &mut self.sign,
            BaselineKind::Cos => &mut self.cos,
            BaselineKind::Gd => &mut self.gd,
        };
        *slot = Some(value);
    }

    pub(crate) fn csv_fields(&self, seed: u64) -> Vec<String> {
        vec![
            seed.to_string(),
            self.t.to_string(),
            fmt_f64(self.train_loss),
            fmt_opt(self.test_loss),
            fmt_opt(self.test_accuracy),
            fmt_opt(self.validation_loss),
            fmt_opt(self.z),
            fmt_opt(self.s_hat),
            (self.degenerate as u8).to_string(),
            fmt_opt(self.exact_s),
            fmt_opt(self.eb),
            fmt_opt(self.gsnr),
            fmt_opt(self.sign),
            fmt_opt(self.cos),
            fmt_opt(self.gd),
        ]
    }
}
