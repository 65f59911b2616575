use serde::{Deserialize, Serialize};

use crate::corpus::EncodeLimits;
use crate::diffcore::AdamConfig;
use crate::error::{Error, Result};
use crate::models::ModelConfig;

/// Validation metric used to pick the checkpoint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    /// AUROC for binary tasks, macro-F1 otherwise.
    #[default]
    Auto,
    Auroc,
    MacroF1,
    Accuracy,
}

impl SelectionMetric {
    /// Metric key for a task with `classes` labels.
    pub fn resolve(self, classes: usize) -> Result<&'static str> {
        match (self, classes) {
            (Self::Auto, 2) | (Self::Auroc, 2) => Ok("auroc"),
            (Self::Auroc, k) => Err(Error::Parameter(format!(
                "AUROC selection needs a binary task, got {k} classes"
            ))),
            (Self::Auto, _) | (Self::MacroF1, _) => Ok("macro_f1"),
            (Self::Accuracy, _) => Ok("accuracy"),
        }
    }
}

/// Optimisation and data settings shared by every strategy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    /// Stop after this many validation evaluations without improvement.
    pub patience: usize,
    pub selection: SelectionMetric,
    pub seed: u64,
    pub min_freq: usize,
    pub limits: EncodeLimits,
    /// Architecture sizes and dropout; vocabulary size and class count are
    /// filled from the corpus.
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 50,
            batch_size: 32,
            lr: 1e-3,
            weight_decay: 0.0,
            patience: 5,
            selection: SelectionMetric::Auto,
            seed: 0,
            min_freq: 1,
            limits: EncodeLimits::default(),
            model: ModelConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("max_epochs", self.max_epochs),
            ("batch_size", self.batch_size),
            ("patience", self.patience),
            ("min_freq", self.min_freq),
            ("limits.max_docs", self.limits.max_docs),
            ("limits.max_tokens_per_doc", self.limits.max_tokens_per_doc),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Parameter(format!("{name} must be ≥ 1")));
            }
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Parameter(format!("lr must be > 0, got {}", self.lr)));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::Parameter(format!(
                "weight_decay must be ≥ 0, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
            ..AdamConfig::default()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}
