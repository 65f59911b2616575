use crate::corpus::{build_vocab, encode_view, slice_window, Corpus, Split, Vocabulary};
use crate::error::{Error, Result};
use crate::models::{init_model, predict_logits, Architecture, ModelConfig, ModelParams};

use super::config::TrainConfig;
use super::fit::{evaluate, fit, Dataset, FitOutput, Teacher};
use super::loss::DistillConfig;
use super::record::{RunRecord, Strategy};
use super::seed::{derive_seed, params_digest};

/// Vocabulary and sized model config for a corpus.
fn prepare(corpus: &Corpus, arch: Architecture, cfg: &TrainConfig) -> Result<(Vocabulary, ModelConfig)> {
    cfg.validate()?;
    let counts = corpus.split_counts();
    if counts.train == 0 || counts.validation == 0 || counts.test == 0 {
        return Err(Error::Corpus(format!(
            "every split must be nonempty (train {}, validation {}, test {})",
            counts.train, counts.validation, counts.test
        )));
    }
    let vocab = build_vocab(corpus, cfg.min_freq, cfg.model.embed_dim)?;
    let classes = cfg.model.num_classes.max(corpus.num_classes());
    corpus.check_labels(classes)?;
    let model = ModelConfig {
        vocab_size: vocab.len(),
        num_classes: classes,
        ..cfg.model.clone()
    };
    model.validate(arch)?;
    Ok((vocab, model))
}

fn encode(corpus: &Corpus, split: Split, windows: &[f64], vocab: &Vocabulary, cfg: &TrainConfig) -> Result<Dataset> {
    let mut data = Dataset::default();
    for sample in corpus.split(split) {
        for &t in windows {
            let view = slice_window(sample, t)?;
            data.views.push(encode_view(&view, vocab, cfg.limits));
            data.labels.push(sample.label);
        }
    }
    Ok(data)
}

fn check_window(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Parameter(format!("window must be a positive number, got {t}")));
    }
    Ok(())
}

/// One fit from `init`: training instances from `train_windows`,
/// validation and test on `eval_window`.
#[allow(clippy::too_many_arguments)]
fn run_stage(
    corpus: &Corpus,
    vocab: &Vocabulary,
    init: ModelParams,
    train_windows: &[f64],
    eval_window: f64,
    cfg: &TrainConfig,
    stream_seed: u64,
    strategy: Strategy,
    teacher: Option<(&[Vec<f64>], &DistillConfig)>,
) -> Result<(ModelParams, RunRecord)> {
    let train = encode(corpus, Split::Train, train_windows, vocab, cfg)?;
    let val = encode(corpus, Split::Validation, &[eval_window], vocab, cfg)?;
    let test = encode(corpus, Split::Test, &[eval_window], vocab, cfg)?;
    let architecture = init.architecture;
    let init_digest = params_digest(&init);
    let teacher_arg = teacher.map(|(logits, config)| Teacher { logits, config });
    let FitOutput {
        params,
        epochs,
        step_losses,
        selected_epoch,
        validation_metrics,
        selection_metric,
    } = fit(init, &train, teacher_arg, &val, cfg, stream_seed)?;
    let test_metrics = evaluate(&params, &test)?.metrics;
    let mut windows = train_windows.to_vec();
    if windows.last() != Some(&eval_window) {
        windows.push(eval_window);
    }
    let record = RunRecord {
        strategy,
        architecture,
        windows,
        seed: cfg.seed,
        train_config: cfg.clone(),
        distill: teacher.map(|(_, d)| *d),
        vocab_hash: vocab.hash(),
        train_instances: train.len(),
        selection_metric: selection_metric.to_owned(),
        epochs,
        step_losses,
        selected_epoch,
        validation_metrics,
        test_metrics,
        init_digest,
        selected_digest: params_digest(&params),
        notes: Vec::new(),
        teacher: None,
        stages: Vec::new(),
    };
    Ok((params, record))
}

fn fresh_model(arch: Architecture, model: &ModelConfig, cfg: &TrainConfig) -> Result<ModelParams> {
    init_model(arch, model, derive_seed(cfg.seed, "init"))
}

fn train_stream(cfg: &TrainConfig) -> u64 {
    derive_seed(cfg.seed, "train")
}

/// Cross-entropy training on window `t`, selected on validation at `t`.
/// With `t` beyond the baseline this is how teachers are produced.
pub fn train_standard(
    corpus: &Corpus,
    arch: Architecture,
    window: f64,
    cfg: &TrainConfig,
) -> Result<(ModelParams, RunRecord)> {
    check_window(window)?;
    let (vocab, model) = prepare(corpus, arch, cfg)?;
    let init = fresh_model(arch, &model, cfg)?;
    run_stage(corpus, &vocab, init, &[window], window, cfg, train_stream(cfg), Strategy::Baseline, None)
}

/// Seed of the teacher run inside a LuPIET run with seed `seed`.
pub fn teacher_seed(seed: u64) -> u64 {
    derive_seed(seed, "teacher")
}

/// Trains a teacher on `teacher_window`, then distils it into a student
/// restricted to `baseline`.
pub fn train_lupiet(
    corpus: &Corpus,
    arch: Architecture,
    baseline: f64,
    teacher_window: f64,
    cfg: &TrainConfig,
    distill: &DistillConfig,
) -> Result<(ModelParams, RunRecord)> {
    check_window(baseline)?;
    check_window(teacher_window)?;
    if teacher_window <= baseline {
        return Err(Error::Parameter(format!(
            "teacher window {teacher_window} must exceed baseline window {baseline}"
        )));
    }
    distill.validate()?;
    let teacher_cfg = cfg.with_seed(teacher_seed(cfg.seed));
    let (teacher, mut teacher_record) =
        train_standard(corpus, arch, teacher_window, &teacher_cfg).map_err(|e| Error::Teacher(Box::new(e)))?;
    teacher_record.strategy = Strategy::Teacher;
    distill_from_teacher(corpus, baseline, &teacher, teacher_window, Some(teacher_record), cfg, distill)
}

/// Student half of [`train_lupiet`] with an already trained teacher, so one
/// teacher can serve a whole τ/α grid. The teacher is only read.
pub fn distill_from_teacher(
    corpus: &Corpus,
    baseline: f64,
    teacher: &ModelParams,
    teacher_window: f64,
    teacher_record: Option<RunRecord>,
    cfg: &TrainConfig,
    distill: &DistillConfig,
) -> Result<(ModelParams, RunRecord)> {
    check_window(baseline)?;
    distill.validate()?;
    let arch = teacher.architecture;
    let (vocab, model) = prepare(corpus, arch, cfg)?;
    if teacher.config.vocab_size != model.vocab_size || teacher.config.num_classes != model.num_classes {
        return Err(Error::Parameter(format!(
            "teacher expects {} tokens and {} classes, corpus gives {} and {}",
            teacher.config.vocab_size, teacher.config.num_classes, model.vocab_size, model.num_classes
        )));
    }
    let teacher_inputs = encode(corpus, Split::Train, &[teacher_window], &vocab, cfg)?;
    let views: Vec<_> = teacher_inputs.views.iter().collect();
    let teacher_logits = predict_logits(teacher, &views)?;
    let init = fresh_model(arch, &model, cfg)?;
    let (params, mut record) = run_stage(
        corpus,
        &vocab,
        init,
        &[baseline],
        baseline,
        cfg,
        train_stream(cfg),
        Strategy::Lupiet,
        Some((&teacher_logits, distill)),
    )?;
    record.windows = vec![baseline, teacher_window];
    record.notes = vec![
        "teacher and student share the architecture".into(),
        "teacher logits computed once in eval mode".into(),
        "distillation term uses train-mode student logits".into(),
    ];
    record.teacher = teacher_record.map(Box::new);
    Ok((params, record))
}

/// Trains on `windows[0]` from scratch, then fine-tunes on each shorter
/// window in turn from the previous stage's selected checkpoint.
pub fn train_transfer(
    corpus: &Corpus,
    arch: Architecture,
    windows: &[f64],
    cfg: &TrainConfig,
) -> Result<(ModelParams, RunRecord)> {
    if windows.is_empty() {
        return Err(Error::Parameter("transfer needs at least one window".into()));
    }
    for &t in windows {
        check_window(t)?;
    }
    if windows.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Parameter(format!(
            "transfer windows must be strictly decreasing, got {windows:?}"
        )));
    }
    let (vocab, model) = prepare(corpus, arch, cfg)?;
    let mut params = fresh_model(arch, &model, cfg)?;
    let mut stages = Vec::with_capacity(windows.len());
    for (i, &t) in windows.iter().enumerate() {
        let stream = if i == 0 {
            train_stream(cfg)
        } else {
            derive_seed(cfg.seed, &format!("stage{}", i + 1))
        };
        let (next, record) = run_stage(corpus, &vocab, params, &[t], t, cfg, stream, Strategy::Transfer, None)?;
        params = next;
        stages.push(record);
    }
    let mut record = stages.last().expect("nonempty").clone();
    record.windows = windows.to_vec();
    record.init_digest = stages[0].init_digest.clone();
    if stages.len() > 1 {
        record.stages = stages;
    }
    Ok((params, record))
}

/// Trains from scratch on one instance per (sample, window) pair; validation
/// and test use the smallest window.
pub fn train_mixed(
    corpus: &Corpus,
    arch: Architecture,
    windows: &[f64],
    cfg: &TrainConfig,
) -> Result<(ModelParams, RunRecord)> {
    if windows.is_empty() {
        return Err(Error::Parameter("mixed training needs at least one window".into()));
    }
    for &t in windows {
        check_window(t)?;
    }
    let mut sorted = windows.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let baseline = sorted[0];
    let (vocab, model) = prepare(corpus, arch, cfg)?;
    let init = fresh_model(arch, &model, cfg)?;
    let (params, mut record) =
        run_stage(corpus, &vocab, init, &sorted, baseline, cfg, train_stream(cfg), Strategy::Mixed, None)?;
    record.windows = sorted;
    Ok((params, record))
}
