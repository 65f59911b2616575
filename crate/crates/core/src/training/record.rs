use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::metrics::MetricMap;
use crate::models::Architecture;

use super::config::TrainConfig;
use super::loss::DistillConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Baseline,
    Teacher,
    Lupiet,
    Transfer,
    Mixed,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Baseline => "baseline",
            Self::Teacher => "teacher",
            Self::Lupiet => "lupiet",
            Self::Transfer => "transfer",
            Self::Mixed => "mixed",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Self::Baseline),
            "teacher" => Ok(Self::Teacher),
            "lupiet" => Ok(Self::Lupiet),
            "transfer" => Ok(Self::Transfer),
            "mixed" => Ok(Self::Mixed),
            other => Err(Error::Parameter(format!(
                "unknown strategy `{other}` (expected baseline, teacher, lupiet, transfer or mixed)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_metric: f64,
}

/// Everything needed to audit one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub strategy: Strategy,
    pub architecture: Architecture,
    /// Windows involved: the chain for transfer, the sorted set for mixed,
    /// `[baseline, teacher]` for LuPIET, otherwise the single window.
    pub windows: Vec<f64>,
    pub seed: u64,
    pub train_config: TrainConfig,
    pub distill: Option<DistillConfig>,
    pub vocab_hash: String,
    pub train_instances: usize,
    pub selection_metric: String,
    pub epochs: Vec<EpochLog>,
    /// Mean mini-batch loss of every optimiser step.
    pub step_losses: Vec<f64>,
    /// 1-based epoch of the selected checkpoint.
    pub selected_epoch: usize,
    pub validation_metrics: MetricMap,
    pub test_metrics: MetricMap,
    pub init_digest: String,
    pub selected_digest: String,
    pub notes: Vec<String>,
    pub teacher: Option<Box<RunRecord>>,
    pub stages: Vec<RunRecord>,
}

impl RunRecord {
    /// Writes one JSON object per line; nested teacher and stage records
    /// come first, tagged with their scope.
    pub fn write_log<W: Write>(&self, w: &mut W) -> Result<()> {
        self.write_scoped(w, "run")
    }

    fn write_scoped<W: Write>(&self, w: &mut W, scope: &str) -> Result<()> {
        if let Some(t) = &self.teacher {
            t.write_scoped(w, &format!("{scope}.teacher"))?;
        }
        for (i, s) in self.stages.iter().enumerate() {
            s.write_scoped(w, &format!("{scope}.stage{}", i + 1))?;
        }
        let mut lines: Vec<Value> = vec![json!({
            "record": "header",
            "scope": scope,
            "strategy": self.strategy,
            "architecture": self.architecture,
            "windows": self.windows,
            "seed": self.seed,
            "train_config": self.train_config,
            "distill": self.distill,
            "vocab_hash": self.vocab_hash,
            "train_instances": self.train_instances,
            "selection_metric": self.selection_metric,
            "init_digest": self.init_digest,
            "notes": self.notes,
        })];
        for e in &self.epochs {
            lines.push(json!({
                "record": "epoch",
                "scope": scope,
                "epoch": e.epoch,
                "train_loss": e.train_loss,
                "val_loss": e.val_loss,
                "val_metric": e.val_metric,
            }));
        }
        lines.push(json!({ "record": "steps", "scope": scope, "losses": self.step_losses }));
        lines.push(json!({
            "record": "result",
            "scope": scope,
            "selected_epoch": self.selected_epoch,
            "selected_digest": self.selected_digest,
            "validation_metrics": self.validation_metrics,
            "test_metrics": self.test_metrics,
        }));
        for line in lines {
            serde_json::to_writer(&mut *w, &line).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save_log(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_log(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }
}
