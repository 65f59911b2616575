use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type MetricMap = BTreeMap<String, f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub values: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (`n - 1`); zero for a single seed.
    pub std: f64,
}

impl MetricSummary {
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Self { values, mean, std }
    }
}

/// Mean and spread of each metric across seeds for one strategy/window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub strategy: String,
    pub window: String,
    pub seed_count: usize,
    pub metrics: BTreeMap<String, MetricSummary>,
}

pub fn aggregate_seeds(
    strategy: impl Into<String>,
    window: impl Into<String>,
    per_seed: &[MetricMap],
) -> Result<MetricsReport> {
    let first = per_seed
        .first()
        .ok_or_else(|| Error::Aggregation("no per-seed results to aggregate".into()))?;
    for (i, m) in per_seed.iter().enumerate() {
        if m.keys().ne(first.keys()) {
            return Err(Error::Aggregation(format!(
                "seed {i} reports metrics {:?}, expected {:?}",
                m.keys().collect::<Vec<_>>(),
                first.keys().collect::<Vec<_>>()
            )));
        }
    }
    let metrics = first
        .keys()
        .map(|k| {
            let values = per_seed.iter().map(|m| m[k]).collect();
            (k.clone(), MetricSummary::from_values(values))
        })
        .collect();
    Ok(MetricsReport {
        strategy: strategy.into(),
        window: window.into(),
        seed_count: per_seed.len(),
        metrics,
    })
}

pub const TABLE_HEADER: &str = "strategy,window,seed_count,metric,mean,std";

impl MetricsReport {
    /// CSV rows (no header), one per metric.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for (name, s) in &self.metrics {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                self.strategy, self.window, self.seed_count, name, s.mean, s.std
            );
        }
        out
    }

    /// `mean (std)` cell, three decimals for the mean and four for the std.
    pub fn cell(&self, metric: &str) -> String {
        match self.metrics.get(metric) {
            Some(s) => format!("{:.3} ({:.4})", s.mean, s.std),
            None => "-".into(),
        }
    }
}

/// Full CSV table with header.
pub fn reports_to_csv(reports: &[MetricsReport]) -> String {
    let mut out = format!("{TABLE_HEADER}\n");
    for r in reports {
        out.push_str(&r.csv_rows());
    }
    out
}
