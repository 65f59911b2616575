//! `lupiet` command-line runner: corpus generation, single-strategy
//! training, strategy comparison and learning curves.

mod config;
mod runner;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::corpus::{generate_synthetic, save_corpus, SynthSpec};
use crate::error::{Error, Result};
use crate::metrics::{learning_curve, reports_to_csv, CurveSpec, MetricsReport, TABLE_HEADER};
use crate::training::{DistillConfig, Strategy};

pub use config::{CorpusSource, CurveSettings, DistillGrid, ExperimentConfig};
pub use runner::{grid_search, jobs_for, run_job, run_jobs, run_seed, write_artifacts, GridOutcome, Job, JobResult};

#[derive(Debug, Parser)]
#[command(name = "lupiet", version, about = "Early-prediction text classifiers distilled from longer windows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus file from a generator spec.
    GenData {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one strategy for every configured seed.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = parse_strategy)]
        strategy: Strategy,
        /// Run only this replicate instead of every configured seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        jobs: u64,
    },
    /// Run the baseline and every configured strategy and tabulate them.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        jobs: u64,
    },
    /// Baseline vs LuPIET on growing fractions of the training split.
    Curve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        ratios: Vec<f64>,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        jobs: u64,
    },
}

fn parse_strategy(s: &str) -> std::result::Result<Strategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Exit status for an error: 2 for invalid input, 1 for runtime failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::Parameter(_) | Error::Validation(_) => 2,
        _ => 1,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn with_pool<T: Send>(jobs: u64, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs as usize)
        .build()
        .map_err(|e| Error::Parameter(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(f))
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::GenData { spec, out } => gen_data(&spec, &out),
        Command::Train {
            config,
            strategy,
            seed,
            jobs,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            with_pool(jobs, || train(&cfg, strategy, seed))?
        }
        Command::Compare { config, jobs } => {
            let cfg = ExperimentConfig::load(&config)?;
            with_pool(jobs, || compare(&cfg))?
        }
        Command::Curve { config, ratios, jobs } => {
            let cfg = ExperimentConfig::load(&config)?;
            with_pool(jobs, || curve(&cfg, &ratios))?
        }
    }
}

fn gen_data(spec_path: &Path, out: &Path) -> Result<i32> {
    let text = fs::read_to_string(spec_path)?;
    let spec: SynthSpec = toml::from_str(&text).map_err(|e| Error::config("spec", e.message().to_owned()))?;
    spec.validate().map_err(|e| Error::config("spec", e.to_string()))?;
    let corpus = generate_synthetic(&spec)?;
    save_corpus(&corpus, out)?;
    println!("{}", corpus.split_counts());
    Ok(0)
}

/// A table row, or `(strategy, window, error)` for a failed job.
type Row = std::result::Result<MetricsReport, (String, String, String)>;

/// Writes artifacts for each job and returns the rows, failures as text.
fn finish_jobs(cfg: &ExperimentConfig, results: &[JobResult]) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for r in results {
        write_artifacts(cfg, r)?;
        rows.push(match &r.report {
            Ok(rep) => Ok(rep.clone()),
            Err(msg) => Err((
                r.job.strategy().to_string(),
                r.job.window_label(cfg.baseline_window),
                msg.clone(),
            )),
        });
    }
    Ok(rows)
}

fn table_csv(rows: &[Row]) -> String {
    let mut out = format!("{TABLE_HEADER}\n");
    for row in rows {
        match row {
            Ok(rep) => out.push_str(&reports_to_csv(std::slice::from_ref(rep))[TABLE_HEADER.len() + 1..]),
            Err((s, w, _)) => {
                let _ = writeln!(out, "{s},{w},0,failed,,");
            }
        }
    }
    out
}

/// Human-readable layout: one line per row, `mean (std)` per metric.
fn table_text(rows: &[Row]) -> String {
    let metrics: Vec<String> = rows
        .iter()
        .filter_map(|r| r.as_ref().ok())
        .flat_map(|r| r.metrics.keys().cloned())
        .fold(Vec::new(), |mut acc, k| {
            if !acc.contains(&k) {
                acc.push(k);
            }
            acc
        });
    let mut out = format!("{:<10} {:<12}", "strategy", "window");
    for m in &metrics {
        let _ = write!(out, " {m:>16}");
    }
    out.push('\n');
    for row in rows {
        match row {
            Ok(rep) => {
                let _ = write!(out, "{:<10} {:<12}", rep.strategy, rep.window);
                for m in &metrics {
                    let _ = write!(out, " {:>16}", rep.cell(m));
                }
            }
            Err((s, w, msg)) => {
                let _ = write!(out, "{s:<10} {w:<12} failed: {msg}");
            }
        }
        out.push('\n');
    }
    out
}

fn replicates(cfg: &ExperimentConfig, only: Option<u64>) -> Vec<u64> {
    match only {
        Some(s) => vec![s],
        None => cfg.seeds.clone(),
    }
}

fn report_failures(results: &[JobResult]) -> bool {
    let mut failed = false;
    for r in results {
        for (rep, run) in &r.runs {
            if let Err(e) = run {
                eprintln!("error: {} seed {rep}: {e}", r.job.strategy());
                failed = true;
            }
        }
        if let Err(msg) = &r.report {
            if r.runs.is_empty() {
                eprintln!("error: {}: {msg}", r.job.strategy());
            }
            failed = true;
        }
    }
    failed
}

fn train(cfg: &ExperimentConfig, strategy: Strategy, seed: Option<u64>) -> Result<i32> {
    let corpus = cfg.load_corpus()?;
    let jobs = jobs_for(strategy, cfg);
    if jobs.is_empty() {
        return Err(Error::config("windows", format!("`{strategy}` needs at least one extended window")));
    }
    let results = run_jobs(&corpus, cfg, &jobs, &replicates(cfg, seed));
    let rows = finish_jobs(cfg, &results)?;
    let csv = table_csv(&rows);
    fs::write(cfg.output_dir.join(strategy.as_str()).join("metrics.csv"), &csv)?;
    print!("{csv}");
    Ok(if report_failures(&results) { 1 } else { 0 })
}

const ORDER: [Strategy; 5] = [
    Strategy::Baseline,
    Strategy::Teacher,
    Strategy::Lupiet,
    Strategy::Transfer,
    Strategy::Mixed,
];

fn compare(cfg: &ExperimentConfig) -> Result<i32> {
    let corpus = cfg.load_corpus()?;
    let jobs: Vec<Job> = ORDER
        .iter()
        .filter(|s| **s == Strategy::Baseline || cfg.strategies.contains(s))
        .flat_map(|&s| jobs_for(s, cfg))
        .collect();
    let results = run_jobs(&corpus, cfg, &jobs, &cfg.seeds);
    let rows = finish_jobs(cfg, &results)?;
    fs::create_dir_all(&cfg.output_dir)?;
    let csv = table_csv(&rows);
    fs::write(cfg.output_dir.join("comparison.csv"), &csv)?;
    let text = table_text(&rows);
    fs::write(cfg.output_dir.join("comparison.txt"), &text)?;
    print!("{text}");
    Ok(if report_failures(&results) { 1 } else { 0 })
}

fn curve(cfg: &ExperimentConfig, ratios: &[f64]) -> Result<i32> {
    for (i, &r) in ratios.iter().enumerate() {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::config(format!("ratios[{i}]"), format!("must be in (0, 1], got {r}")));
        }
    }
    let teacher_window = match cfg.curve.teacher_window.or(cfg.windows.first().copied()) {
        Some(t) => t,
        None => return Err(Error::config("windows", "the learning curve needs an extended window")),
    };
    let distill = DistillConfig {
        tau: cfg.curve.tau.unwrap_or(cfg.distill.tau[0]),
        alpha: cfg.curve.alpha.unwrap_or(cfg.distill.alpha[0]),
        tau_squared: cfg.distill.tau_squared,
        direction: cfg.distill.direction,
    };
    let metric = cfg
        .curve
        .metric
        .clone()
        .unwrap_or_else(|| if cfg.num_classes == 2 { "auroc".into() } else { "macro_f1".into() });
    let corpus = cfg.load_corpus()?;
    let spec = CurveSpec {
        architecture: cfg.architecture,
        baseline_window: cfg.baseline_window,
        teacher_window,
        train: cfg.train_config(),
        distill,
    };
    let seeds: Vec<u64> = cfg.seeds.iter().map(|&s| run_seed(cfg.master_seed, s)).collect();
    let curve = learning_curve(&corpus, &spec, ratios, &seeds)?;
    fs::create_dir_all(&cfg.output_dir)?;
    let csv = curve.to_csv();
    fs::write(cfg.output_dir.join("curve.csv"), &csv)?;
    let summary = curve.gap_summary(&metric);
    fs::write(cfg.output_dir.join("curve_summary.txt"), format!("{summary}\n"))?;
    print!("{csv}");
    println!("{summary}");
    Ok(0)
}
