use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Training-loop knobs shared by both models. "Improvement" always means
/// strictly better than the best validation loss seen so far minus
/// improvement_delta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub initial_lr: f64,
    pub batch_size: usize,
    pub lr_factor: f64,
    pub lr_patience: usize,
    pub early_stop_patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub min_lr: f64,
    pub improvement_delta: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            initial_lr: 1e-3,
            batch_size: 128,
            lr_factor: 0.2,
            lr_patience: 5,
            early_stop_patience: 7,
            max_epochs: 200,
            seed: 0,
            min_lr: 1e-6,
            improvement_delta: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr_factor > 0.0 && self.lr_factor < 1.0) {
            return Err(Error::Validation(format!(
                "lr_factor {} must be in (0, 1)",
                self.lr_factor
            )));
        }
        if self.lr_patience < 1 || self.early_stop_patience < 1 {
            return Err(Error::Validation("patiences must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Validation("batch_size must be >= 1".into()));
        }
        if self.max_epochs < 1 {
            return Err(Error::Validation("max_epochs must be >= 1".into()));
        }
        if !self.initial_lr.is_finite() || self.initial_lr < 0.0 {
            return Err(Error::Validation(format!(
                "initial_lr {} must be finite and >= 0",
                self.initial_lr
            )));
        }
        if !self.min_lr.is_finite() || self.min_lr < 0.0 {
            return Err(Error::Validation("min_lr must be finite and >= 0".into()));
        }
        if !self.improvement_delta.is_finite() || self.improvement_delta < 0.0 {
            return Err(Error::Validation(
                "improvement_delta must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// What one observed validation loss did to the schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochDecision {
    pub improved: bool,
    pub lr_reduced: bool,
    pub stop: bool,
}

/// Shared best-loss tracker driving both the LR-on-plateau rule and early
/// stopping. The best loss is never reset; only the patience counters are.
#[derive(Debug, Clone)]
pub struct PlateauTracker {
    lr: f64,
    lr_factor: f64,
    lr_patience: usize,
    early_stop_patience: usize,
    min_lr: f64,
    delta: f64,
    best: f64,
    best_epoch: usize,
    epochs_seen: usize,
    bad_for_lr: usize,
    bad_for_stop: usize,
}

impl PlateauTracker {
    pub fn new(cfg: &TrainConfig) -> Self {
        Self {
            lr: cfg.initial_lr,
            lr_factor: cfg.lr_factor,
            lr_patience: cfg.lr_patience,
            early_stop_patience: cfg.early_stop_patience,
            min_lr: cfg.min_lr,
            delta: cfg.improvement_delta,
            best: f64::INFINITY,
            best_epoch: 0,
            epochs_seen: 0,
            bad_for_lr: 0,
            bad_for_stop: 0,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn best_loss(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn observe(&mut self, val_loss: f64) -> EpochDecision {
        let epoch = self.epochs_seen;
        self.epochs_seen += 1;
        if val_loss < self.best - self.delta {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.bad_for_lr = 0;
            self.bad_for_stop = 0;
            return EpochDecision {
                improved: true,
                lr_reduced: false,
                stop: false,
            };
        }
        self.bad_for_lr += 1;
        self.bad_for_stop += 1;
        let mut lr_reduced = false;
        if self.bad_for_lr >= self.lr_patience {
            let next = (self.lr * self.lr_factor).max(self.min_lr);
            lr_reduced = next < self.lr;
            self.lr = next;
            self.bad_for_lr = 0;
        }
        EpochDecision {
            improved: false,
            lr_reduced,
            stop: self.bad_for_stop >= self.early_stop_patience,
        }
    }
}

/// Replays a validation-loss history through the plateau rule and returns
/// the learning rate in force after the last epoch.
pub fn lr_on_plateau(history: &[f64], cfg: &TrainConfig) -> f64 {
    let mut t = PlateauTracker::new(cfg);
    for &v in history {
        t.observe(v);
    }
    t.lr()
}

/// Replays a history through the early-stopping rule: would training have
/// stopped by the end, and which epoch held the best loss.
pub fn early_stop(history: &[f64], patience: usize) -> (bool, usize) {
    let mut best = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut bad = 0usize;
    for (i, &v) in history.iter().enumerate() {
        if v < best {
            best = v;
            best_epoch = i;
            bad = 0;
        } else {
            bad += 1;
            if bad >= patience {
                return (true, best_epoch);
            }
        }
    }
    (false, best_epoch)
}
