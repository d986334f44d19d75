//! JSON training configuration. Every field is optional and falls back to
//! [`ProbeTrainConfig::default`].

use std::fs;
use std::path::Path;

use embgeom_core::probes::ProbeTrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{format_err, io_err, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfigFile {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2_lambda: f64,
    pub seed: u64,
    pub train_fraction: f64,
    pub lr_decay: f64,
    pub max_train: usize,
    pub max_test: usize,
}

impl Default for TrainConfigFile {
    fn default() -> Self {
        ProbeTrainConfig::default().into()
    }
}

impl From<ProbeTrainConfig> for TrainConfigFile {
    fn from(c: ProbeTrainConfig) -> Self {
        TrainConfigFile {
            learning_rate: c.learning_rate,
            epochs: c.epochs,
            batch_size: c.batch_size,
            l2_lambda: c.l2_lambda,
            seed: c.seed,
            train_fraction: c.train_fraction,
            lr_decay: c.lr_decay,
            max_train: c.max_train,
            max_test: c.max_test,
        }
    }
}

impl From<TrainConfigFile> for ProbeTrainConfig {
    fn from(c: TrainConfigFile) -> Self {
        ProbeTrainConfig {
            learning_rate: c.learning_rate,
            epochs: c.epochs,
            batch_size: c.batch_size,
            l2_lambda: c.l2_lambda,
            seed: c.seed,
            train_fraction: c.train_fraction,
            lr_decay: c.lr_decay,
            max_train: c.max_train,
            max_test: c.max_test,
        }
    }
}

/// Reads and validates a config file; `None` gives the defaults.
pub fn read_train_config(path: Option<&Path>) -> Result<ProbeTrainConfig> {
    let cfg: ProbeTrainConfig = match path {
        None => ProbeTrainConfig::default(),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(io_err(p))?;
            serde_json::from_str::<TrainConfigFile>(&text)
                .map_err(|e| format_err(p, e.to_string()))?
                .into()
        }
    };
    if let Err(e) = cfg.validate() {
        return Err(match path {
            Some(p) => format_err(p, e.to_string()),
            None => e.into(),
        });
    }
    Ok(cfg)
}
