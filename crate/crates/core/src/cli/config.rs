use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{generate_synthetic, load_corpus, Corpus, SynthSpec};
use crate::error::{Error, Result};
use crate::models::{Architecture, ModelConfig};
use crate::training::{DistillConfig, KlDirection, Strategy, TrainConfig};

/// Where the corpus comes from: a corpus file or an inline generator spec.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSource {
    pub path: Option<PathBuf>,
    pub synth: Option<SynthSpec>,
}

/// Candidate temperatures and blend weights for the LuPIET grid search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistillGrid {
    pub tau: Vec<f64>,
    pub alpha: Vec<f64>,
    pub tau_squared: bool,
    pub direction: KlDirection,
}

impl Default for DistillGrid {
    fn default() -> Self {
        Self {
            tau: vec![2.0],
            alpha: vec![0.5],
            tau_squared: false,
            direction: KlDirection::StudentFirst,
        }
    }
}

impl DistillGrid {
    /// Every (τ, α) pair, τ-major in declaration order.
    pub fn points(&self) -> Vec<DistillConfig> {
        self.tau
            .iter()
            .flat_map(|&tau| {
                self.alpha.iter().map(move |&alpha| DistillConfig {
                    tau,
                    alpha,
                    tau_squared: self.tau_squared,
                    direction: self.direction,
                })
            })
            .collect()
    }
}

/// Settings of the `curve` command.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveSettings {
    /// Defaults to the first extended window.
    pub teacher_window: Option<f64>,
    /// Defaults to the first grid point.
    pub tau: Option<f64>,
    pub alpha: Option<f64>,
    pub metric: Option<String>,
}

/// A full experiment description, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    pub architecture: Architecture,
    pub num_classes: usize,
    pub baseline_window: f64,
    /// Extended windows, strictly increasing and beyond the baseline.
    pub windows: Vec<f64>,
    pub strategies: Vec<Strategy>,
    pub seeds: Vec<u64>,
    pub master_seed: u64,
    pub corpus: CorpusSource,
    pub train: TrainConfig,
    pub distill: DistillGrid,
    pub curve: CurveSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            architecture: Architecture::Word,
            num_classes: 2,
            baseline_window: 1.0,
            windows: vec![3.0, 7.0],
            strategies: vec![Strategy::Baseline, Strategy::Lupiet, Strategy::Transfer, Strategy::Mixed],
            seeds: vec![0, 1, 2, 3, 4],
            master_seed: 0,
            corpus: CorpusSource::default(),
            train: TrainConfig::default(),
            distill: DistillGrid::default(),
            curve: CurveSettings::default(),
        }
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::config(path, format!("must be a positive number, got {v}")));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Parses TOML and resolves relative paths against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| {
            let message = e.message().to_owned();
            let path = e
                .span()
                .map(|s| {
                    let line = text[..s.start].matches('\n').count() + 1;
                    format!("line {line}")
                })
                .unwrap_or_else(|| "<document>".into());
            Error::config(path, message)
        })?;
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base_dir.join(&cfg.output_dir);
        }
        if let Some(p) = &cfg.corpus.path {
            if p.is_relative() {
                cfg.corpus.path = Some(base_dir.join(p));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    /// Rejects inconsistent settings, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::config("num_classes", "must be ≥ 2"));
        }
        positive("baseline_window", self.baseline_window)?;
        for (i, &w) in self.windows.iter().enumerate() {
            positive(&format!("windows[{i}]"), w)?;
        }
        let mut prev = self.baseline_window;
        for (i, &w) in self.windows.iter().enumerate() {
            if w <= prev {
                return Err(Error::config(
                    format!("windows[{i}]"),
                    format!("windows must be strictly increasing and beyond baseline_window ({prev} then {w})"),
                ));
            }
            prev = w;
        }
        if self.strategies.is_empty() {
            return Err(Error::config("strategies", "must name at least one strategy"));
        }
        for (i, s) in self.strategies.iter().enumerate() {
            if *s != Strategy::Baseline && self.windows.is_empty() {
                return Err(Error::config(
                    format!("strategies[{i}]"),
                    format!("`{s}` needs at least one extended window in `windows`"),
                ));
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "must list at least one seed"));
        }
        if self.distill.tau.is_empty() {
            return Err(Error::config("distill.tau", "must list at least one temperature"));
        }
        if self.distill.alpha.is_empty() {
            return Err(Error::config("distill.alpha", "must list at least one blend weight"));
        }
        for (i, &t) in self.distill.tau.iter().enumerate() {
            positive(&format!("distill.tau[{i}]"), t)?;
        }
        for (i, &a) in self.distill.alpha.iter().enumerate() {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::config(format!("distill.alpha[{i}]"), format!("must be in [0, 1], got {a}")));
            }
        }
        self.train.validate().map_err(|e| Error::config("train", e.to_string()))?;
        let model = ModelConfig {
            num_classes: self.num_classes,
            ..self.train.model.clone()
        };
        model
            .validate(self.architecture)
            .map_err(|e| Error::config("train.model", e.to_string()))?;
        match (&self.corpus.path, &self.corpus.synth) {
            (Some(_), Some(_)) => return Err(Error::config("corpus", "set either `path` or `synth`, not both")),
            (None, None) => return Err(Error::config("corpus", "set `path` or a `[corpus.synth]` table")),
            (None, Some(spec)) => spec.validate().map_err(|e| Error::config("corpus.synth", e.to_string()))?,
            (Some(_), None) => {}
        }
        if let Some(t) = self.curve.teacher_window {
            if !self.windows.contains(&t) {
                return Err(Error::config("curve.teacher_window", format!("{t} is not one of `windows`")));
            }
        }
        if let Some(t) = self.curve.tau {
            positive("curve.tau", t)?;
        }
        if let Some(a) = self.curve.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::config("curve.alpha", format!("must be in [0, 1], got {a}")));
            }
        }
        Ok(())
    }

    pub fn load_corpus(&self) -> Result<Corpus> {
        let corpus = match (&self.corpus.path, &self.corpus.synth) {
            (Some(p), _) => load_corpus(p)?,
            (None, Some(spec)) => generate_synthetic(spec)?,
            (None, None) => unreachable!("validated"),
        };
        corpus.check_labels(self.num_classes)?;
        Ok(corpus)
    }

    /// Training settings with the task's class count filled in.
    pub fn train_config(&self) -> TrainConfig {
        let mut t = self.train.clone();
        t.model.num_classes = self.num_classes;
        t
    }
}
