//! Synthetic time-series text corpora whose label signal can strengthen after
//! the baseline window.
//!
//! Every sample has a latent class drawn from the prior. Each token slot of a
//! document is, independently:
//!
//! * a signal token of the latent class with probability `rho_early` (document
//!   time ≤ `baseline_window`) or `rho_late` (later documents);
//! * otherwise, with probability `noise_rate`, a signal token of a uniformly
//!   random class;
//! * otherwise a neutral filler token.
//!
//! The recorded label equals the latent class, except that with probability
//! `label_noise` it is replaced by a different class chosen uniformly.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::sample::{Corpus, Document, Split, TimeSeriesSample};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub num_samples: usize,
    pub num_classes: usize,
    /// Uniform when absent.
    pub class_prior: Option<Vec<f64>>,
    /// Total distinct tokens the generator can emit.
    pub vocab_size: usize,
    pub signal_tokens_per_class: usize,
    /// Poisson rate of documents per unit of time.
    pub docs_per_unit_time: f64,
    /// Series lengths are uniform on `[min_length, horizon]`.
    pub min_length: f64,
    pub horizon: f64,
    pub tokens_per_doc: usize,
    /// Boundary between early and late emission rates.
    pub baseline_window: f64,
    pub rho_early: f64,
    pub rho_late: f64,
    pub noise_rate: f64,
    pub label_noise: f64,
    /// Integer chunk timestamps (`1..=ceil(length)`) instead of real-valued days.
    pub chunked: bool,
    /// Train/validation/test fractions.
    pub split_ratio: [f64; 3],
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            num_samples: 1000,
            num_classes: 2,
            class_prior: None,
            vocab_size: 200,
            signal_tokens_per_class: 8,
            docs_per_unit_time: 2.0,
            min_length: 0.5,
            horizon: 7.0,
            tokens_per_doc: 12,
            baseline_window: 1.0,
            rho_early: 0.05,
            rho_late: 0.3,
            noise_rate: 0.05,
            label_noise: 0.0,
            chunked: false,
            split_ratio: [0.8, 0.1, 0.1],
            seed: 0,
        }
    }
}

fn probability(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be a probability, got {v}")))
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        probability("rho_early", self.rho_early)?;
        probability("rho_late", self.rho_late)?;
        probability("noise_rate", self.noise_rate)?;
        probability("label_noise", self.label_noise)?;
        if self.num_samples == 0 {
            return Err(Error::Parameter("num_samples must be ≥ 1".into()));
        }
        if self.num_classes < 2 {
            return Err(Error::Parameter("num_classes must be ≥ 2".into()));
        }
        if self.signal_tokens_per_class == 0 || self.tokens_per_doc == 0 {
            return Err(Error::Parameter(
                "signal_tokens_per_class and tokens_per_doc must be ≥ 1".into(),
            ));
        }
        if self.vocab_size <= self.num_classes * self.signal_tokens_per_class {
            return Err(Error::Parameter(format!(
                "vocab_size {} leaves no room for neutral tokens after {} signal tokens",
                self.vocab_size,
                self.num_classes * self.signal_tokens_per_class
            )));
        }
        if !(self.docs_per_unit_time >= 0.0) || !self.docs_per_unit_time.is_finite() {
            return Err(Error::Parameter("docs_per_unit_time must be ≥ 0".into()));
        }
        if !(self.min_length > 0.0) || !(self.horizon >= self.min_length) || !self.horizon.is_finite() {
            return Err(Error::Parameter(format!(
                "need 0 < min_length ≤ horizon, got {} and {}",
                self.min_length, self.horizon
            )));
        }
        if !(self.baseline_window > 0.0) {
            return Err(Error::Parameter("baseline_window must be > 0".into()));
        }
        if let Some(prior) = &self.class_prior {
            if prior.len() != self.num_classes {
                return Err(Error::Parameter(format!(
                    "class_prior has {} entries for {} classes",
                    prior.len(),
                    self.num_classes
                )));
            }
            for &p in prior {
                probability("class_prior entry", p)?;
            }
            if (prior.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::Parameter("class_prior must sum to 1".into()));
            }
        }
        if self.split_ratio.iter().any(|&r| !(0.0..=1.0).contains(&r))
            || (self.split_ratio.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::Parameter(format!(
                "split_ratio {:?} must be fractions summing to 1",
                self.split_ratio
            )));
        }
        Ok(())
    }

    fn prior(&self) -> Vec<f64> {
        self.class_prior
            .clone()
            .unwrap_or_else(|| vec![1.0 / self.num_classes as f64; self.num_classes])
    }
}

/// Name of the `j`-th signal token of class `k`.
pub fn signal_token(class: usize, j: usize) -> String {
    format!("sig{class}x{j}")
}

fn neutral_token(j: usize) -> String {
    format!("w{j:04}")
}

fn draw_class(rng: &mut ChaCha8Rng, prior: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in prior.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    prior.len() - 1
}

/// Deterministic per `spec.seed`.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Corpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let prior = spec.prior();
    let k = spec.num_classes;
    let m = spec.signal_tokens_per_class;
    let neutral = spec.vocab_size - k * m;
    let width = spec.num_samples.to_string().len().max(5);

    let mut samples = Vec::with_capacity(spec.num_samples);
    for i in 0..spec.num_samples {
        let latent = draw_class(&mut rng, &prior);
        let label = if rng.random::<f64>() < spec.label_noise {
            let shift = rng.random_range(1..k);
            (latent + shift) % k
        } else {
            latent
        };
        let length = if spec.horizon > spec.min_length {
            rng.random_range(spec.min_length..=spec.horizon)
        } else {
            spec.horizon
        };
        let extra = if spec.docs_per_unit_time > 0.0 {
            let poisson = Poisson::new(spec.docs_per_unit_time * length)
                .map_err(|e| Error::Parameter(e.to_string()))?;
            poisson.sample(&mut rng) as usize
        } else {
            0
        };
        // the first document always falls inside the baseline window
        let mut times = vec![rng.random_range(0.0..=length.min(spec.baseline_window))];
        times.extend((0..extra).map(|_| rng.random_range(0.0..=length)));
        if spec.chunked {
            for t in &mut times {
                *t = t.ceil().max(1.0);
            }
        }
        times.sort_by(f64::total_cmp);

        let documents = times
            .into_iter()
            .map(|time| {
                let rho = if time <= spec.baseline_window {
                    spec.rho_early
                } else {
                    spec.rho_late
                };
                let words: Vec<String> = (0..spec.tokens_per_doc)
                    .map(|_| {
                        if rng.random::<f64>() < rho {
                            signal_token(latent, rng.random_range(0..m))
                        } else if rng.random::<f64>() < spec.noise_rate {
                            signal_token(rng.random_range(0..k), rng.random_range(0..m))
                        } else {
                            neutral_token(rng.random_range(0..neutral))
                        }
                    })
                    .collect();
                Document::new(time, words.join(" ") + ".")
            })
            .collect();
        samples.push((format!("s{i:0width$}"), label, documents));
    }

    let n = spec.num_samples;
    let n_train = (spec.split_ratio[0] * n as f64).round() as usize;
    let n_val = ((spec.split_ratio[1] * n as f64).round() as usize).min(n - n_train.min(n));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut splits = vec![Split::Test; n];
    for (rank, &idx) in order.iter().enumerate() {
        splits[idx] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Validation
        } else {
            Split::Test
        };
    }

    let samples = samples
        .into_iter()
        .zip(splits)
        .map(|((id, label, docs), split)| TimeSeriesSample::new(id, label, split, docs))
        .collect::<Result<Vec<_>>>()?;
    Corpus::new(samples)
}
