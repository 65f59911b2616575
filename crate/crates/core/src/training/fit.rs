use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::EncodedView;
use crate::diffcore::{cross_entropy, softmax_with_temperature, AdamState, Graph, NodeId, Tensor};
use crate::error::{Error, Result};
use crate::metrics::{accuracy, aupr, auroc, macro_f1, MetricMap, ScoredPredictions};
use crate::models::{forward, predict_logits, ModelParams, Mode};

use super::config::TrainConfig;
use super::loss::{combined_loss_node, DistillConfig};
use super::record::EpochLog;

/// Encoded inputs with their labels.
#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub views: Vec<EncodedView>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Metrics and mean cross-entropy of a model on a dataset.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub metrics: MetricMap,
    pub loss: f64,
    pub logits: Vec<Vec<f64>>,
}

pub fn evaluate(params: &ModelParams, data: &Dataset) -> Result<Evaluation> {
    let inputs: Vec<&EncodedView> = data.views.iter().collect();
    let logits = predict_logits(params, &inputs)?;
    let mut loss = 0.0;
    let mut probs = Vec::with_capacity(logits.len());
    for (z, &y) in logits.iter().zip(&data.labels) {
        loss += cross_entropy(z, y)?;
        probs.push(softmax_with_temperature(z, 1.0)?);
    }
    loss /= data.len() as f64;
    let preds = ScoredPredictions::new(data.labels.clone(), probs)?;
    let mut metrics = MetricMap::new();
    if preds.classes() == 2 {
        metrics.insert("auroc".into(), auroc(&preds)?);
        metrics.insert("aupr".into(), aupr(&preds)?);
    }
    metrics.insert("accuracy".into(), accuracy(&preds));
    metrics.insert("macro_f1".into(), macro_f1(&preds));
    Ok(Evaluation { metrics, loss, logits })
}

pub(crate) struct FitOutput {
    pub params: ModelParams,
    pub epochs: Vec<EpochLog>,
    pub step_losses: Vec<f64>,
    pub selected_epoch: usize,
    pub validation_metrics: MetricMap,
    pub selection_metric: &'static str,
}

/// Cached eval-mode teacher logits, one row per training instance.
pub(crate) struct Teacher<'a> {
    pub logits: &'a [Vec<f64>],
    pub config: &'a DistillConfig,
}

/// Mini-batch Adam from `init`, keeping the checkpoint with the best
/// validation metric (earliest on ties) and stopping after `patience`
/// evaluations without improvement.
pub(crate) fn fit(
    init: ModelParams,
    train: &Dataset,
    teacher: Option<Teacher<'_>>,
    val: &Dataset,
    cfg: &TrainConfig,
    stream_seed: u64,
) -> Result<FitOutput> {
    if train.is_empty() || val.is_empty() {
        return Err(Error::Corpus("training and validation sets must be nonempty".into()));
    }
    if let Some(t) = &teacher {
        if t.logits.len() != train.len() {
            return Err(Error::dim(
                "fit",
                format!("{} teacher rows for {} instances", t.logits.len(), train.len()),
            ));
        }
    }
    let selection_metric = cfg.selection.resolve(init.config.num_classes)?;
    let names: Vec<String> = init.names().map(str::to_owned).collect();
    let mut params = init;
    let mut adam = AdamState::new(cfg.adam(), params.iter().map(|(_, t)| t));
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed);
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut epochs = Vec::new();
    let mut step_losses = Vec::new();
    let mut best: Option<(f64, usize, ModelParams, MetricMap)> = None;
    let mut since_best = 0;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let mut g = Graph::new();
            let bound = params.bind(&mut g);
            let weight = 1.0 / chunk.len() as f64;
            let mut total: Option<NodeId> = None;
            for &i in chunk {
                let logits = forward(&mut g, &params, &bound, &train.views[i], &mut Mode::Train(&mut rng))?;
                let loss = match &teacher {
                    Some(t) => combined_loss_node(&mut g, logits, &t.logits[i], train.labels[i], t.config)?,
                    None => g.cross_entropy(logits, train.labels[i])?,
                };
                let term = g.scale(loss, weight);
                total = Some(match total {
                    Some(acc) => g.add(acc, term)?,
                    None => term,
                });
            }
            let total = total.expect("chunks are nonempty");
            let value = g.value(total).item();
            if !value.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    step: step_losses.len() + 1,
                    loss: value,
                });
            }
            g.backward(total)?;
            let grads: Vec<Tensor> = names.iter().map(|n| g.take_grad(bound.get(n))).collect();
            adam.update(&mut params.tensors_mut(), &grads)?;
            step_losses.push(value);
            epoch_loss += value * chunk.len() as f64;
        }
        if !params.all_finite() {
            return Err(Error::Diverged {
                epoch,
                step: step_losses.len(),
                loss: f64::NAN,
            });
        }
        let eval = evaluate(&params, val)?;
        let score = eval.metrics[selection_metric];
        epochs.push(EpochLog {
            epoch,
            train_loss: epoch_loss / train.len() as f64,
            val_loss: eval.loss,
            val_metric: score,
        });
        let improved = best.as_ref().is_none_or(|(b, ..)| score > *b);
        if improved {
            best = Some((score, epoch, params.clone(), eval.metrics));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    let (_, selected_epoch, params, validation_metrics) = best.expect("max_epochs ≥ 1");
    Ok(FitOutput {
        params,
        epochs,
        step_losses,
        selected_epoch,
        validation_metrics,
        selection_metric,
    })
}
