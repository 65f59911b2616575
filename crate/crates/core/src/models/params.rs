use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diffcore::{Graph, NodeId, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    /// Residual multi-filter CNN over all window tokens concatenated.
    Word,
    /// Per-document encoder followed by an LSTM over documents.
    Doc,
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Architecture::Word => "word",
            Architecture::Doc => "doc",
        })
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word" => Ok(Architecture::Word),
            "doc" => Ok(Architecture::Doc),
            other => Err(Error::Parameter(format!("unknown architecture `{other}` (word | doc)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Filled from the vocabulary when training.
    pub vocab_size: usize,
    pub num_classes: usize,
    pub embed_dim: usize,
    /// Word model: one residual bank per width.
    pub filter_widths: Vec<usize>,
    /// Word model: filters per bank.
    pub filters: usize,
    /// Doc model: document embedding size.
    pub encoder_dim: usize,
    /// Doc model: LSTM hidden size.
    pub hidden_size: usize,
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            vocab_size: 2,
            num_classes: 2,
            embed_dim: 16,
            filter_widths: vec![3, 5, 7],
            filters: 16,
            encoder_dim: 16,
            hidden_size: 16,
            dropout: 0.1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self, arch: Architecture) -> Result<()> {
        let positive = [
            ("vocab_size", self.vocab_size),
            ("num_classes", self.num_classes),
            ("embed_dim", self.embed_dim),
        ];
        let specific: &[(&str, usize)] = match arch {
            Architecture::Word => &[("filters", self.filters)],
            Architecture::Doc => &[("encoder_dim", self.encoder_dim), ("hidden_size", self.hidden_size)],
        };
        for (name, v) in positive.iter().chain(specific) {
            if *v == 0 {
                return Err(Error::Parameter(format!("{name} must be ≥ 1")));
            }
        }
        if self.num_classes < 2 {
            return Err(Error::Parameter("num_classes must be ≥ 2".into()));
        }
        if arch == Architecture::Word && (self.filter_widths.is_empty() || self.filter_widths.contains(&0)) {
            return Err(Error::Parameter(format!(
                "filter_widths must be a non-empty list of positive widths, got {:?}",
                self.filter_widths
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Parameter(format!("dropout must be in [0, 1), got {}", self.dropout)));
        }
        Ok(())
    }
}

/// Named parameter tensors of one model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub architecture: Architecture,
    pub config: ModelConfig,
    pub seed: u64,
    tensors: BTreeMap<String, Tensor>,
}

/// Graph node ids of a model's parameters, keyed by name.
#[derive(Clone, Debug)]
pub struct Bound {
    ids: BTreeMap<String, NodeId>,
}

impl Bound {
    /// Wraps ids already registered on a graph, e.g. by a gradient checker.
    pub fn from_ids(ids: impl IntoIterator<Item = (String, NodeId)>) -> Self {
        Self {
            ids: ids.into_iter().collect(),
        }
    }

    pub fn get(&self, name: &str) -> NodeId {
        self.ids[name]
    }

    /// `(name, id)` in registry order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, NodeId)> {
        self.ids.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl ModelParams {
    pub fn from_tensors(
        architecture: Architecture,
        config: ModelConfig,
        seed: u64,
        tensors: BTreeMap<String, Tensor>,
    ) -> Result<Self> {
        config.validate(architecture)?;
        let expected = parameter_shapes(architecture, &config);
        if expected.len() != tensors.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} tensors for {architecture} model, got {}",
                expected.len(),
                tensors.len()
            )));
        }
        for (name, shape) in &expected {
            match tensors.get(name) {
                Some(t) if t.shape() == shape.as_slice() => {}
                Some(t) => {
                    return Err(Error::Checkpoint(format!(
                        "tensor {name} has shape {:?}, expected {shape:?}",
                        t.shape()
                    )))
                }
                None => return Err(Error::Checkpoint(format!("missing tensor {name}"))),
            }
        }
        Ok(Self {
            architecture,
            config,
            seed,
            tensors,
        })
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.get_mut(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Mutable tensors in registry order.
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.tensors.values_mut().collect()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.values().all(Tensor::all_finite)
    }

    /// Registers every tensor on `g` as a differentiable leaf.
    pub fn bind(&self, g: &mut Graph) -> Bound {
        self.bind_with(g, true)
    }

    /// Registers every tensor on `g` as a constant (no gradients).
    pub fn bind_frozen(&self, g: &mut Graph) -> Bound {
        self.bind_with(g, false)
    }

    fn bind_with(&self, g: &mut Graph, trainable: bool) -> Bound {
        let ids = self
            .tensors
            .iter()
            .map(|(k, t)| {
                let id = if trainable {
                    g.param(t.clone())
                } else {
                    g.constant(t.clone())
                };
                (k.clone(), id)
            })
            .collect();
        Bound { ids }
    }

    /// Bitwise equality of every tensor.
    pub fn bitwise_eq(&self, other: &ModelParams) -> bool {
        self.architecture == other.architecture
            && self.tensors.len() == other.tensors.len()
            && self.tensors.iter().zip(&other.tensors).all(|((na, a), (nb, b))| {
                na == nb
                    && a.shape() == b.shape()
                    && a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits())
            })
    }
}

/// Ordered `(name, shape)` list for an architecture.
pub fn parameter_shapes(arch: Architecture, cfg: &ModelConfig) -> BTreeMap<String, Vec<usize>> {
    let (v, d, k) = (cfg.vocab_size, cfg.embed_dim, cfg.num_classes);
    let mut shapes = BTreeMap::new();
    shapes.insert("embedding".to_string(), vec![v, d]);
    match arch {
        Architecture::Word => {
            let f = cfg.filters;
            for (i, &w) in cfg.filter_widths.iter().enumerate() {
                shapes.insert(format!("bank{i}.weight"), vec![w * d, f]);
                shapes.insert(format!("bank{i}.bias"), vec![f]);
                shapes.insert(format!("bank{i}.residual"), vec![d, f]);
            }
            shapes.insert("head.weight".into(), vec![cfg.filter_widths.len() * f, k]);
            shapes.insert("head.bias".into(), vec![k]);
        }
        Architecture::Doc => {
            let (e, h) = (cfg.encoder_dim, cfg.hidden_size);
            shapes.insert("encoder.weight".into(), vec![d, e]);
            shapes.insert("encoder.bias".into(), vec![e]);
            shapes.insert("lstm.input_weight".into(), vec![e, 4 * h]);
            shapes.insert("lstm.hidden_weight".into(), vec![h, 4 * h]);
            shapes.insert("lstm.bias".into(), vec![4 * h]);
            shapes.insert("head.weight".into(), vec![h, k]);
            shapes.insert("head.bias".into(), vec![k]);
        }
    }
    shapes
}

/// Glorot-uniform bound for a weight tensor.
pub fn init_bound(name: &str, shape: &[usize]) -> Option<f64> {
    if name.ends_with("bias") {
        return None;
    }
    let (fan_in, fan_out) = (shape[0], shape[1]);
    Some((6.0 / (fan_in + fan_out) as f64).sqrt())
}

/// Deterministic initialization: weights and embeddings uniform in
/// `(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`, biases zero, LSTM
/// forget-gate bias one, padding embedding row zero.
pub fn init_model(arch: Architecture, config: &ModelConfig, seed: u64) -> Result<ModelParams> {
    config.validate(arch)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tensors = BTreeMap::new();
    for (name, shape) in parameter_shapes(arch, config) {
        let mut t = Tensor::zeros(&shape);
        if let Some(a) = init_bound(&name, &shape) {
            for v in t.data_mut() {
                *v = rng.random_range(-a..a);
            }
        }
        if name == "embedding" {
            let d = shape[1];
            t.data_mut()[..d].iter_mut().for_each(|v| *v = 0.0);
        }
        if name == "lstm.bias" {
            let h = config.hidden_size;
            t.data_mut()[h..2 * h].iter_mut().for_each(|v| *v = 1.0);
        }
        tensors.insert(name, t);
    }
    Ok(ModelParams {
        architecture: arch,
        config: config.clone(),
        seed,
        tensors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ModelConfig {
        ModelConfig {
            vocab_size: 30,
            ..Default::default()
        }
    }

    #[test]
    fn same_seed_bitwise_identical() {
        for arch in [Architecture::Word, Architecture::Doc] {
            let a = init_model(arch, &cfg(), 9).unwrap();
            let b = init_model(arch, &cfg(), 9).unwrap();
            assert!(a.bitwise_eq(&b));
            let c = init_model(arch, &cfg(), 10).unwrap();
            assert!(!a.bitwise_eq(&c));
        }
    }

    #[test]
    fn weights_within_fan_bound_and_biases_zero() {
        for arch in [Architecture::Word, Architecture::Doc] {
            let p = init_model(arch, &cfg(), 1).unwrap();
            for (name, t) in p.iter() {
                match init_bound(name, t.shape()) {
                    Some(a) => assert!(t.max_abs() <= a, "{name}"),
                    None if name == "lstm.bias" => {
                        let h = p.config.hidden_size;
                        assert!(t.data()[h..2 * h].iter().all(|&v| v == 1.0));
                        assert!(t.data()[..h].iter().all(|&v| v == 0.0));
                    }
                    None => assert_eq!(t.max_abs(), 0.0, "{name}"),
                }
            }
        }
    }

    #[test]
    fn parameter_count_matches_registry() {
        let p = init_model(Architecture::Word, &cfg(), 0).unwrap();
        let c = cfg();
        let (v, d, f, k) = (c.vocab_size, c.embed_dim, c.filters, c.num_classes);
        let banks: usize = c.filter_widths.iter().map(|w| w * d * f + f + d * f).sum();
        assert_eq!(p.num_parameters(), v * d + banks + 3 * f * k + k);
        assert_eq!(p.len(), 3 + 3 * 3);
    }

    #[test]
    fn invalid_dims_rejected() {
        let bad = ModelConfig {
            embed_dim: 0,
            ..cfg()
        };
        assert!(matches!(init_model(Architecture::Word, &bad, 0), Err(Error::Parameter(_))));
        let bad = ModelConfig {
            filter_widths: vec![],
            ..cfg()
        };
        assert!(init_model(Architecture::Word, &bad, 0).is_err());
        // widths are irrelevant to the doc model
        assert!(init_model(Architecture::Doc, &bad, 0).is_ok());
        let bad = ModelConfig {
            hidden_size: 0,
            ..cfg()
        };
        assert!(init_model(Architecture::Doc, &bad, 0).is_err());
    }
}
