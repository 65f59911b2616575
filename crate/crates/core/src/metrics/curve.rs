use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Split};
use crate::error::{Error, Result};
use crate::models::Architecture;
use crate::training::{derive_seed, train_lupiet, train_standard, DistillConfig, TrainConfig};

use super::report::{aggregate_seeds, MetricMap, MetricsReport};

/// Stratified training subset holding `round(ratio * n_c)` samples of each
/// class `c`. Each class is permuted once per seed, independently of the
/// ratio, and the subset takes a prefix of that permutation, so smaller
/// ratios give subsets of larger ones. Validation and test are untouched.
pub fn stratified_subset(corpus: &Corpus, ratio: f64, seed: u64) -> Result<Corpus> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::Subsample(format!("ratio must be in (0, 1], got {ratio}")));
    }
    let mut by_class: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for s in corpus.split(Split::Train) {
        by_class.entry(s.label).or_default().push(&s.id);
    }
    let mut keep = HashSet::new();
    for (&class, ids) in &by_class {
        let mut ids = ids.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("subsample:{class}")));
        ids.shuffle(&mut rng);
        let n = (ratio * ids.len() as f64).round() as usize;
        if n == 0 {
            return Err(Error::Subsample(format!(
                "ratio {ratio} leaves class {class} empty ({} training samples)",
                ids.len()
            )));
        }
        keep.extend(ids.into_iter().take(n));
    }
    Ok(corpus.with_train_subset(&keep))
}

/// What a learning-curve sweep trains at each point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub architecture: Architecture,
    pub baseline_window: f64,
    pub teacher_window: f64,
    pub train: TrainConfig,
    pub distill: DistillConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub ratio: f64,
    pub report: MetricsReport,
}

/// Baseline, teacher and LuPIET test metrics per training-data ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub rows: Vec<CurveRow>,
}

pub const CURVE_HEADER: &str = "ratio,strategy,window,seed_count,metric,mean,std";

struct SeedRun {
    baseline: MetricMap,
    teacher: MetricMap,
    lupiet: MetricMap,
}

/// Runs baseline and LuPIET for every (ratio, seed) pair. Runs are spread
/// over the current rayon pool and merged in input order.
pub fn learning_curve(corpus: &Corpus, spec: &CurveSpec, ratios: &[f64], seeds: &[u64]) -> Result<LearningCurve> {
    if ratios.is_empty() || seeds.is_empty() {
        return Err(Error::Parameter("learning curve needs ratios and seeds".into()));
    }
    let jobs: Vec<(f64, u64)> = ratios
        .iter()
        .flat_map(|&r| seeds.iter().map(move |&s| (r, s)))
        .collect();
    let runs: Vec<SeedRun> = jobs
        .par_iter()
        .map(|&(ratio, seed)| {
            let sub = stratified_subset(corpus, ratio, seed)?;
            let cfg = spec.train.with_seed(seed);
            let (_, base) = train_standard(&sub, spec.architecture, spec.baseline_window, &cfg)?;
            let (_, student) = train_lupiet(
                &sub,
                spec.architecture,
                spec.baseline_window,
                spec.teacher_window,
                &cfg,
                &spec.distill,
            )?;
            let teacher = student.teacher.as_ref().expect("LuPIET records carry the teacher");
            Ok(SeedRun {
                baseline: base.test_metrics,
                teacher: teacher.test_metrics.clone(),
                lupiet: student.test_metrics,
            })
        })
        .collect::<Result<_>>()?;
    let base_w = fmt_window(spec.baseline_window);
    let teacher_w = fmt_window(spec.teacher_window);
    let mut rows = Vec::new();
    for (i, &ratio) in ratios.iter().enumerate() {
        let chunk = &runs[i * seeds.len()..(i + 1) * seeds.len()];
        let pick = |f: fn(&SeedRun) -> &MetricMap| chunk.iter().map(|r| f(r).clone()).collect::<Vec<_>>();
        for (strategy, window, values) in [
            ("baseline", base_w.clone(), pick(|r| &r.baseline)),
            ("teacher", teacher_w.clone(), pick(|r| &r.teacher)),
            ("lupiet", format!("{teacher_w}->{base_w}"), pick(|r| &r.lupiet)),
        ] {
            rows.push(CurveRow {
                ratio,
                report: aggregate_seeds(strategy, window, &values)?,
            });
        }
    }
    Ok(LearningCurve { rows })
}

pub(crate) fn fmt_window(t: f64) -> String {
    format!("{t}")
}

impl LearningCurve {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CURVE_HEADER}\n");
        for row in &self.rows {
            for line in row.report.csv_rows().lines() {
                let _ = writeln!(out, "{},{line}", row.ratio);
            }
        }
        out
    }

    pub fn report(&self, ratio: f64, strategy: &str) -> Option<&MetricsReport> {
        self.rows
            .iter()
            .find(|r| r.ratio == ratio && r.report.strategy == strategy)
            .map(|r| &r.report)
    }

    /// Mean LuPIET minus mean baseline for `metric` at `ratio`.
    pub fn gap(&self, ratio: f64, metric: &str) -> Option<f64> {
        let l = self.report(ratio, "lupiet")?.metrics.get(metric)?.mean;
        let b = self.report(ratio, "baseline")?.metrics.get(metric)?.mean;
        Some(l - b)
    }

    /// One line comparing the gap at the smallest ratio with the gap at the
    /// largest.
    pub fn gap_summary(&self, metric: &str) -> String {
        let ratios: Vec<f64> = self.rows.iter().map(|r| r.ratio).collect();
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        match (self.gap(lo, metric), self.gap(hi, metric)) {
            (Some(a), Some(b)) => format!(
                "gap {metric} (lupiet - baseline): ratio {lo} = {a:+.4}, ratio {hi} = {b:+.4}, {}",
                if a > b { "shrinks with more data" } else { "does not shrink" }
            ),
            _ => format!("gap {metric}: unavailable"),
        }
    }
}
