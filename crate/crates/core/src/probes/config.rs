use crate::error::{Error, Result};

/// Hyperparameters shared by every probe trainer. All training is plain
/// mini-batch SGD driven by a single seeded generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeTrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2_lambda: f64,
    pub seed: u64,
    /// Fraction of (balanced) examples used for training; the rest is held out.
    pub train_fraction: f64,
    /// Learning rate multiplier applied after every epoch.
    pub lr_decay: f64,
    /// Caps on split sizes for the multiclass attention probe.
    pub max_train: usize,
    pub max_test: usize,
}

impl Default for ProbeTrainConfig {
    fn default() -> Self {
        ProbeTrainConfig {
            learning_rate: 0.1,
            epochs: 20,
            batch_size: 32,
            l2_lambda: 1e-4,
            seed: 0,
            train_fraction: 0.7,
            lr_decay: 1.0,
            max_train: 300_000,
            max_test: 150_000,
        }
    }
}

impl ProbeTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::validation("learning_rate must be positive"));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::validation("epochs and batch_size must be positive"));
        }
        if !(self.l2_lambda >= 0.0) || !self.l2_lambda.is_finite() {
            return Err(Error::validation("l2_lambda must be nonnegative"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::validation("train_fraction must lie in (0, 1)"));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::validation("lr_decay must lie in (0, 1]"));
        }
        if self.max_train == 0 {
            return Err(Error::validation("max_train must be positive"));
        }
        Ok(())
    }
}
