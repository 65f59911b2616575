use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{EncodedView, PAD};
use crate::diffcore::{conv1d_multi, lstm_step, FilterBank, Graph, LstmCell, NodeId, Tensor};
use crate::error::{Error, Result};

use super::params::{Architecture, Bound, ModelParams};

/// Train mode samples inverted-dropout masks from the given stream.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut ChaCha8Rng),
}

fn dropout(g: &mut Graph, x: NodeId, rate: f64, mode: &mut Mode<'_>) -> Result<NodeId> {
    let Mode::Train(rng) = mode else { return Ok(x) };
    if rate == 0.0 {
        return Ok(x);
    }
    let keep = 1.0 / (1.0 - rate);
    let mask = (0..g.value(x).len())
        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
        .collect();
    g.mask(x, mask)
}

fn linear_head(g: &mut Graph, features: NodeId, bound: &Bound) -> Result<NodeId> {
    let n = g.value(features).len();
    let row = g.reshape(features, vec![1, n])?;
    let z = g.matmul(row, bound.get("head.weight"))?;
    let k = g.value(z).len();
    let z = g.reshape(z, vec![k])?;
    g.add(z, bound.get("head.bias"))
}

fn check_ids(ids: &[usize], vocab_size: usize) -> Result<()> {
    match ids.iter().find(|&&i| i >= vocab_size) {
        Some(i) => Err(Error::dim(
            "embedding",
            format!("token index {i} outside vocabulary of {vocab_size}"),
        )),
        None => Ok(()),
    }
}

/// Word-level logits: all window tokens concatenated, embedded, run through
/// every residual bank, max-pooled per bank, concatenated and classified.
pub fn forward_word(
    g: &mut Graph,
    params: &ModelParams,
    bound: &Bound,
    input: &EncodedView,
    mode: &mut Mode<'_>,
) -> Result<NodeId> {
    let cfg = &params.config;
    let mut ids = input.concatenated();
    if ids.is_empty() {
        ids.push(PAD);
    }
    check_ids(&ids, cfg.vocab_size)?;
    let emb = g.gather(bound.get("embedding"), &ids)?;
    let emb = dropout(g, emb, cfg.dropout, mode)?;
    let banks: Vec<FilterBank> = cfg
        .filter_widths
        .iter()
        .enumerate()
        .map(|(i, &width)| FilterBank {
            width,
            weight: bound.get(&format!("bank{i}.weight")),
            bias: bound.get(&format!("bank{i}.bias")),
            residual: bound.get(&format!("bank{i}.residual")),
        })
        .collect();
    let activations = conv1d_multi(g, emb, &banks)?;
    let pooled = activations
        .into_iter()
        .map(|a| g.max_pool_time(a))
        .collect::<Result<Vec<_>>>()?;
    let features = g.concat(&pooled)?;
    let features = dropout(g, features, cfg.dropout, mode)?;
    linear_head(g, features, bound)
}

/// Document-level logits: each document mean-pooled and projected, the
/// sequence fed chronologically to an LSTM, the last hidden state classified.
pub fn forward_doc(
    g: &mut Graph,
    params: &ModelParams,
    bound: &Bound,
    input: &EncodedView,
    mode: &mut Mode<'_>,
) -> Result<NodeId> {
    let cfg = &params.config;
    let (e, h) = (cfg.encoder_dim, cfg.hidden_size);
    let mut doc_embeddings = Vec::with_capacity(input.docs.len().max(1));
    for doc in &input.docs {
        check_ids(doc, cfg.vocab_size)?;
        let emb = g.gather(bound.get("embedding"), doc)?;
        let pooled = g.mean_rows(emb)?;
        let pooled = dropout(g, pooled, cfg.dropout, mode)?;
        let row = g.reshape(pooled, vec![1, cfg.embed_dim])?;
        let z = g.matmul(row, bound.get("encoder.weight"))?;
        let z = g.reshape(z, vec![e])?;
        doc_embeddings.push(g.add(z, bound.get("encoder.bias"))?);
    }
    if doc_embeddings.is_empty() {
        doc_embeddings.push(g.constant(Tensor::zeros(&[e])));
    }
    let cell = LstmCell {
        input_weight: bound.get("lstm.input_weight"),
        hidden_weight: bound.get("lstm.hidden_weight"),
        bias: bound.get("lstm.bias"),
    };
    let mut hidden = g.constant(Tensor::zeros(&[h]));
    let mut memory = g.constant(Tensor::zeros(&[h]));
    for x in doc_embeddings {
        (hidden, memory) = lstm_step(g, x, hidden, memory, &cell)?;
    }
    let hidden = dropout(g, hidden, cfg.dropout, mode)?;
    linear_head(g, hidden, bound)
}

pub fn forward(
    g: &mut Graph,
    params: &ModelParams,
    bound: &Bound,
    input: &EncodedView,
    mode: &mut Mode<'_>,
) -> Result<NodeId> {
    match params.architecture {
        Architecture::Word => forward_word(g, params, bound, input, mode),
        Architecture::Doc => forward_doc(g, params, bound, input, mode),
    }
}

/// Eval-mode logits for each input, sharing one frozen parameter binding.
pub fn predict_logits(params: &ModelParams, inputs: &[&EncodedView]) -> Result<Vec<Vec<f64>>> {
    let mut g = Graph::new();
    let bound = params.bind_frozen(&mut g);
    let mark = g.len();
    let mut out = Vec::with_capacity(inputs.len());
    for input in inputs {
        let logits = forward(&mut g, params, &bound, input, &mut Mode::Eval)?;
        out.push(g.value(logits).data().to_vec());
        g.truncate(mark);
    }
    Ok(out)
}
