use std::cmp::Ordering;

use crate::error::{Error, Result};

/// True labels and per-class score vectors for a set of samples.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredPredictions {
    labels: Vec<usize>,
    scores: Vec<Vec<f64>>,
    classes: usize,
}

impl ScoredPredictions {
    pub fn new(labels: Vec<usize>, scores: Vec<Vec<f64>>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::UndefinedMetric("no predictions".into()));
        }
        if labels.len() != scores.len() {
            return Err(Error::dim(
                "predictions",
                format!("{} labels for {} score vectors", labels.len(), scores.len()),
            ));
        }
        let classes = scores[0].len();
        if classes < 2 || scores.iter().any(|s| s.len() != classes) {
            return Err(Error::dim("predictions", "score vectors must share a length ≥ 2"));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::Label { label: bad, classes });
        }
        Ok(Self {
            labels,
            scores,
            classes,
        })
    }

    /// Binary predictions from positive-class scores.
    pub fn binary(labels: &[bool], positive_scores: &[f64]) -> Result<Self> {
        Self::new(
            labels.iter().map(|&l| l as usize).collect(),
            positive_scores.iter().map(|&s| vec![-s, s]).collect(),
        )
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn scores(&self) -> &[Vec<f64>] {
        &self.scores
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn positive_view(&self, metric: &str) -> Result<(Vec<bool>, Vec<f64>)> {
        if self.classes != 2 {
            return Err(Error::UndefinedMetric(format!(
                "{metric} needs binary predictions, got {} classes",
                self.classes
            )));
        }
        Ok((
            self.labels.iter().map(|&l| l == 1).collect(),
            self.scores.iter().map(|s| s[1]).collect(),
        ))
    }

    /// First index of the maximal score for each sample.
    pub fn predicted(&self) -> Vec<usize> {
        self.scores
            .iter()
            .map(|s| {
                let mut best = 0;
                for (i, &v) in s.iter().enumerate().skip(1) {
                    if v > s[best] {
                        best = i;
                    }
                }
                best
            })
            .collect()
    }
}

/// Probability that a random positive outranks a random negative, ties
/// counting one half (Mann–Whitney U / (n⁺ n⁻)).
pub fn auroc_binary(labels: &[bool], scores: &[f64]) -> Result<f64> {
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric("AUROC needs both classes present".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));
    // average 1-based ranks over tie groups
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Average precision: mean precision at the rank of each positive, scores
/// descending with ties kept in original index order.
pub fn aupr_binary(labels: &[bool], scores: &[f64]) -> Result<f64> {
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 {
        return Err(Error::UndefinedMetric("AUPR needs at least one positive".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    let mut hits = 0usize;
    let mut total = 0.0;
    for (rank, &idx) in order.iter().enumerate() {
        if labels[idx] {
            hits += 1;
            total += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(total / n_pos as f64)
}

pub fn auroc(preds: &ScoredPredictions) -> Result<f64> {
    let (labels, scores) = preds.positive_view("AUROC")?;
    auroc_binary(&labels, &scores)
}

pub fn aupr(preds: &ScoredPredictions) -> Result<f64> {
    let (labels, scores) = preds.positive_view("AUPR")?;
    aupr_binary(&labels, &scores)
}

pub fn accuracy(preds: &ScoredPredictions) -> f64 {
    let correct = preds
        .predicted()
        .iter()
        .zip(&preds.labels)
        .filter(|(p, l)| p == l)
        .count();
    correct as f64 / preds.len() as f64
}

/// Unweighted mean of per-class F1 over all classes, with `0/0` terms as 0.
pub fn macro_f1(preds: &ScoredPredictions) -> f64 {
    let k = preds.classes;
    let mut tp = vec![0usize; k];
    let mut fp = vec![0usize; k];
    let mut fneg = vec![0usize; k];
    for (p, &l) in preds.predicted().into_iter().zip(&preds.labels) {
        if p == l {
            tp[l] += 1;
        } else {
            fp[p] += 1;
            fneg[l] += 1;
        }
    }
    let total: f64 = (0..k)
        .map(|c| {
            let denom = 2 * tp[c] + fp[c] + fneg[c];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[c] as f64 / denom as f64
            }
        })
        .sum();
    total / k as f64
}
