use super::BaselineKind;
use crate::criterion::Decision;

pub const DEFAULT_PATIENCE: usize = 5;

/// Counts adverse moves of a baseline statistic; adverse means an increase
/// for GD and a decrease for GSNR, sign and cos. EB has no counter and stops
/// as soon as its value is positive. Counts are cumulative from the start.
#[derive(Debug, Clone)]
pub struct BaselineStopRule {
    kind: BaselineKind,
    patience: usize,
    counter: usize,
    prev: Option<f64>,
    stopped: bool,
}

impl BaselineStopRule {
    pub fn new(kind: BaselineKind) -> Self {
        Self::with_patience(kind, DEFAULT_PATIENCE)
    }

    pub fn with_patience(kind: BaselineKind, patience: usize) -> Self {
        Self {
            kind,
            patience: patience.max(1),
            counter: 0,
            prev: None,
            stopped: false,
        }
    }

    pub fn kind(&self) -> BaselineKind {
        self.kind
    }

    pub fn counter(&self) -> usize {
        self.counter
    }

    pub fn patience(&self) -> usize {
        self.patience
    }

    pub fn stopped(&self) -> bool {
        self.stopped
    }

    /// One transition `prev -> cur`. Once stopped, keeps returning `Stop`
    /// without counting.
    pub fn step(&mut self, prev: f64, cur: f64) -> Decision {
        if self.stopped {
            return Decision::Stop;
        }
        let fire = match self.kind {
            BaselineKind::Eb => cur > 0.0,
            BaselineKind::Gd => {
                if cur > prev {
                    self.counter += 1;
                }
                self.counter >= self.patience
            }
            BaselineKind::Gsnr | BaselineKind::Sign | BaselineKind::Cos => {
                if cur < prev {
                    self.counter += 1;
                }
                self.counter >= self.patience
            }
        };
        if fire {
            self.stopped = true;
            Decision::Stop
        } else {
            Decision::Continue
        }
    }

    /// Feeds the next value in sequence; the first value only primes the
    /// rule (EB may already fire on it).
    pub fn observe(&mut self, cur: f64) -> Decision {
        let decision = match self.prev {
            Some(prev) => self.step(prev, cur),
            None if self.kind == BaselineKind::Eb => self.step(f64::NAN, cur),
            None => Decision::Continue,
        };
        self.prev = Some(cur);
        decision
    }
}
