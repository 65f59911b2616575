use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::metrics::{aggregate_seeds, MetricsReport};
use crate::models::{save_checkpoint, ModelParams};
use crate::training::{
    derive_seed, distill_from_teacher, teacher_seed, train_lupiet, train_mixed, train_standard, train_transfer,
    DistillConfig, RunRecord, Strategy,
};

use super::config::ExperimentConfig;

/// One row of a comparison: a strategy applied to particular windows.
#[derive(Clone, Debug, PartialEq)]
pub enum Job {
    Baseline,
    Teacher(f64),
    Lupiet(f64),
    /// Chain of windows, longest first, ending at the baseline.
    Transfer(Vec<f64>),
    /// Window set including the baseline.
    Mixed(Vec<f64>),
}

fn join(ws: &[f64], sep: &str) -> String {
    ws.iter().map(|w| format!("{w}")).collect::<Vec<_>>().join(sep)
}

impl Job {
    pub fn strategy(&self) -> Strategy {
        match self {
            Job::Baseline => Strategy::Baseline,
            Job::Teacher(_) => Strategy::Teacher,
            Job::Lupiet(_) => Strategy::Lupiet,
            Job::Transfer(_) => Strategy::Transfer,
            Job::Mixed(_) => Strategy::Mixed,
        }
    }

    /// Window column of the comparison table.
    pub fn window_label(&self, baseline: f64) -> String {
        match self {
            Job::Baseline => format!("{baseline}"),
            Job::Teacher(t) => format!("{t}"),
            Job::Lupiet(t) => format!("{t}->{baseline}"),
            Job::Transfer(chain) => join(chain, "->"),
            Job::Mixed(set) => join(set, "+"),
        }
    }

    /// File-name friendly form of the window label.
    pub fn file_tag(&self, baseline: f64) -> String {
        self.window_label(baseline).replace("->", "-").replace('+', "_")
    }
}

/// Rows produced by one strategy, in table order.
pub fn jobs_for(strategy: Strategy, cfg: &ExperimentConfig) -> Vec<Job> {
    let b = cfg.baseline_window;
    match strategy {
        Strategy::Baseline => vec![Job::Baseline],
        Strategy::Teacher => cfg.windows.iter().map(|&w| Job::Teacher(w)).collect(),
        Strategy::Lupiet => cfg.windows.iter().map(|&w| Job::Lupiet(w)).collect(),
        Strategy::Transfer => {
            let mut jobs: Vec<Job> = cfg.windows.iter().map(|&w| Job::Transfer(vec![w, b])).collect();
            if cfg.windows.len() > 1 {
                let mut chain: Vec<f64> = cfg.windows.iter().rev().copied().collect();
                chain.push(b);
                jobs.push(Job::Transfer(chain));
            }
            jobs
        }
        Strategy::Mixed => {
            let mut set = vec![b];
            set.extend(&cfg.windows);
            vec![Job::Mixed(set)]
        }
    }
}

/// Seed of replicate `replicate`: `derive_seed(master_seed, "seed:<replicate>")`.
/// It depends only on the master seed and the replicate, so every strategy
/// sees the same replicate seeds and adding a strategy changes nothing else.
pub fn run_seed(master: u64, replicate: u64) -> u64 {
    derive_seed(master, &format!("seed:{replicate}"))
}

/// Result of a grid search for one teacher window.
#[derive(Clone, Debug)]
pub struct GridOutcome {
    pub points: Vec<(DistillConfig, f64)>,
    pub best: DistillConfig,
}

/// Tries every (τ, α) on the first replicate with one shared teacher and
/// keeps the best validation score (first on ties).
pub fn grid_search(corpus: &Corpus, cfg: &ExperimentConfig, teacher_window: f64, replicate: u64) -> Result<GridOutcome> {
    let train = cfg.train_config().with_seed(run_seed(cfg.master_seed, replicate));
    let grid = cfg.distill.points();
    let (teacher, _) = train_standard(corpus, cfg.architecture, teacher_window, &train.with_seed(teacher_seed(train.seed)))
        .map_err(|e| Error::Teacher(Box::new(e)))?;
    let scores: Vec<f64> = grid
        .par_iter()
        .map(|d| {
            let (_, rec) = distill_from_teacher(corpus, cfg.baseline_window, &teacher, teacher_window, None, &train, d)?;
            Ok(rec.validation_metrics[rec.selection_metric.as_str()])
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(GridOutcome {
        best: grid[best],
        points: grid.into_iter().zip(scores).collect(),
    })
}

pub fn run_job(
    job: &Job,
    corpus: &Corpus,
    cfg: &ExperimentConfig,
    replicate: u64,
    distill: Option<&DistillConfig>,
) -> Result<(ModelParams, RunRecord)> {
    let train = cfg.train_config().with_seed(run_seed(cfg.master_seed, replicate));
    let arch = cfg.architecture;
    match job {
        Job::Baseline => train_standard(corpus, arch, cfg.baseline_window, &train),
        Job::Teacher(t) => {
            let (p, mut rec) = train_standard(corpus, arch, *t, &train)?;
            rec.strategy = Strategy::Teacher;
            Ok((p, rec))
        }
        Job::Lupiet(t) => {
            let d = distill.copied().unwrap_or_default();
            train_lupiet(corpus, arch, cfg.baseline_window, *t, &train, &d)
        }
        Job::Transfer(chain) => train_transfer(corpus, arch, chain, &train),
        Job::Mixed(set) => train_mixed(corpus, arch, set, &train),
    }
}

/// Outcome of one job over all replicates.
pub struct JobResult {
    pub job: Job,
    pub report: std::result::Result<MetricsReport, String>,
    pub grid: Option<GridOutcome>,
    pub runs: Vec<(u64, Result<(ModelParams, RunRecord)>)>,
}

/// Runs `jobs` for every replicate on the current rayon pool. Results come
/// back in job order, replicates in the order given.
pub fn run_jobs(corpus: &Corpus, cfg: &ExperimentConfig, jobs: &[Job], replicates: &[u64]) -> Vec<JobResult> {
    jobs.iter()
        .map(|job| {
            let grid = match job {
                Job::Lupiet(t) => Some(grid_search(corpus, cfg, *t, replicates[0])),
                _ => None,
            };
            let (grid, grid_err) = match grid {
                Some(Ok(g)) => (Some(g), None),
                Some(Err(e)) => (None, Some(e.to_string())),
                None => (None, None),
            };
            if let Some(msg) = grid_err {
                return JobResult {
                    job: job.clone(),
                    report: Err(format!("grid search failed: {msg}")),
                    grid: None,
                    runs: Vec::new(),
                };
            }
            let distill = grid.as_ref().map(|g| g.best);
            let runs: Vec<(u64, Result<(ModelParams, RunRecord)>)> = replicates
                .par_iter()
                .map(|&r| (r, run_job(job, corpus, cfg, r, distill.as_ref())))
                .collect();
            let report = aggregate(job, cfg, &runs);
            JobResult {
                job: job.clone(),
                report,
                grid,
                runs,
            }
        })
        .collect()
}

fn aggregate(
    job: &Job,
    cfg: &ExperimentConfig,
    runs: &[(u64, Result<(ModelParams, RunRecord)>)],
) -> std::result::Result<MetricsReport, String> {
    let mut maps = Vec::new();
    for (r, run) in runs {
        match run {
            Ok((_, rec)) => maps.push(rec.test_metrics.clone()),
            Err(e) => return Err(format!("seed {r}: {e}")),
        }
    }
    aggregate_seeds(job.strategy().as_str(), job.window_label(cfg.baseline_window), &maps).map_err(|e| e.to_string())
}

/// Writes checkpoints, run logs and diagnostics under
/// `<output_dir>/<strategy>/<replicate>/`.
pub fn write_artifacts(cfg: &ExperimentConfig, result: &JobResult) -> Result<Vec<PathBuf>> {
    let tag = result.job.file_tag(cfg.baseline_window);
    let strategy_dir = cfg.output_dir.join(result.job.strategy().as_str());
    let mut written = Vec::new();
    for (replicate, run) in &result.runs {
        let dir = strategy_dir.join(replicate.to_string());
        fs::create_dir_all(&dir)?;
        match run {
            Ok((params, rec)) => {
                let ckpt = dir.join(format!("{tag}.ckpt"));
                save_checkpoint(params, &rec.vocab_hash, &ckpt)?;
                let log = dir.join(format!("{tag}.run.jsonl"));
                rec.save_log(&log)?;
                written.extend([ckpt, log]);
            }
            Err(e) => {
                let path = dir.join(format!("{tag}.error.json"));
                write_diagnostic(&path, result.job.strategy(), e)?;
                written.push(path);
            }
        }
    }
    if let Some(g) = &result.grid {
        fs::create_dir_all(&strategy_dir)?;
        let mut csv = String::from("tau,alpha,validation_score,selected\n");
        for (d, s) in &g.points {
            csv.push_str(&format!("{},{},{},{}\n", d.tau, d.alpha, s, *d == g.best));
        }
        let path = strategy_dir.join(format!("grid-{tag}.csv"));
        fs::write(&path, csv)?;
        written.push(path);
    }
    Ok(written)
}

fn write_diagnostic(path: &Path, strategy: Strategy, err: &Error) -> Result<()> {
    let mut body = json!({ "strategy": strategy, "error": err.to_string() });
    let inner = match err {
        Error::Teacher(inner) => {
            body["phase"] = json!("teacher");
            inner.as_ref()
        }
        other => other,
    };
    if let Error::Diverged { epoch, step, loss } = inner {
        body["diverged"] = json!({ "epoch": epoch, "step": step, "loss": loss.to_string() });
    }
    fs::write(path, serde_json::to_string_pretty(&body).map_err(std::io::Error::from)? + "\n")?;
    Ok(())
}
