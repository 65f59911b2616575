use lupiet_core::corpus::{generate_synthetic, Corpus, Split, SynthSpec};
use lupiet_core::models::{init_model, Architecture};
use lupiet_core::training::{
    distill_from_teacher, params_digest, teacher_seed, train_lupiet, train_mixed, train_standard, train_transfer,
    DistillConfig, RunRecord, Strategy, TrainConfig,
};
use lupiet_core::Error;

fn corpus(n: usize, rho_early: f64, rho_late: f64, seed: u64) -> Corpus {
    generate_synthetic(&SynthSpec {
        num_samples: n,
        rho_early,
        rho_late,
        seed,
        ..SynthSpec::default()
    })
    .unwrap()
}

fn small_config(seed: u64) -> TrainConfig {
    let mut cfg = TrainConfig {
        max_epochs: 3,
        batch_size: 16,
        seed,
        ..TrainConfig::default()
    };
    cfg.model.embed_dim = 8;
    cfg.model.filter_widths = vec![2, 3];
    cfg.model.filters = 4;
    cfg.model.encoder_dim = 6;
    cfg.model.hidden_size = 5;
    cfg
}

fn assert_same_steps(a: &RunRecord, b: &RunRecord) {
    assert_eq!(a.step_losses.len(), b.step_losses.len());
    for (x, y) in a.step_losses.iter().zip(&b.step_losses) {
        assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
    }
}

#[test]
fn degenerate_strategies_reproduce_baseline() {
    let c = corpus(160, 0.05, 0.3, 1);
    for arch in [Architecture::Word, Architecture::Doc] {
        let cfg = small_config(4);
        let (base_params, base) = train_standard(&c, arch, 1.0, &cfg).unwrap();
        let (p, transfer) = train_transfer(&c, arch, &[1.0], &cfg).unwrap();
        assert_same_steps(&base, &transfer);
        assert!(p.bitwise_eq(&base_params));
        let (_, mixed) = train_mixed(&c, arch, &[1.0], &cfg).unwrap();
        assert_same_steps(&base, &mixed);
        let (_, lupiet) = train_lupiet(&c, arch, 1.0, 3.0, &cfg, &DistillConfig::new(2.0, 0.0).unwrap()).unwrap();
        assert_same_steps(&base, &lupiet);
        assert_eq!(lupiet.test_metrics, base.test_metrics);
    }
}

#[test]
fn teacher_is_left_untouched() {
    let c = corpus(120, 0.05, 0.3, 2);
    let cfg = small_config(1);
    let (teacher, _) = train_standard(&c, Architecture::Word, 3.0, &cfg.with_seed(teacher_seed(1))).unwrap();
    let before = teacher.clone();
    let distill = DistillConfig::new(2.0, 0.7).unwrap();
    let (student, record) = distill_from_teacher(&c, 1.0, &teacher, 3.0, None, &cfg, &distill).unwrap();
    assert!(teacher.bitwise_eq(&before));
    assert!(!student.bitwise_eq(&teacher));
    assert_eq!(record.strategy, Strategy::Lupiet);
    assert_eq!(record.windows, vec![1.0, 3.0]);
    assert!(record.notes.iter().any(|n| n.contains("train-mode")));
}

#[test]
fn lupiet_embeds_teacher_record() {
    let c = corpus(120, 0.05, 0.3, 3);
    let cfg = small_config(9);
    let (_, record) = train_lupiet(&c, Architecture::Doc, 1.0, 3.0, &cfg, &DistillConfig::default()).unwrap();
    let teacher = record.teacher.as_ref().unwrap();
    assert_eq!(teacher.strategy, Strategy::Teacher);
    assert_eq!(teacher.windows, vec![3.0]);
    assert_eq!(teacher.seed, teacher_seed(9));
    assert_eq!(record.distill, Some(DistillConfig::default()));
}

#[test]
fn lupiet_requires_longer_teacher_window() {
    let c = corpus(60, 0.05, 0.3, 3);
    let err = train_lupiet(&c, Architecture::Word, 3.0, 1.0, &small_config(0), &DistillConfig::default());
    assert!(matches!(err, Err(Error::Parameter(_))));
}

#[test]
fn transfer_warm_starts_each_stage() {
    let c = corpus(120, 0.05, 0.3, 4);
    let cfg = small_config(2);
    let (_, two) = train_transfer(&c, Architecture::Word, &[3.0, 1.0], &cfg).unwrap();
    assert_eq!(two.stages.len(), 2);
    assert_eq!(two.stages[1].init_digest, two.stages[0].selected_digest);
    assert_eq!(two.stages[0].windows, vec![3.0]);
    assert_eq!(two.stages[1].windows, vec![1.0]);
    assert_eq!(two.test_metrics, two.stages[1].test_metrics);

    let (final_params, three) = train_transfer(&c, Architecture::Word, &[7.0, 3.0, 1.0], &cfg).unwrap();
    assert_eq!(three.stages.len(), 3);
    assert_eq!(three.stages[2].init_digest, three.stages[1].selected_digest);
    assert_eq!(params_digest(&final_params), three.selected_digest);
    assert!(train_transfer(&c, Architecture::Word, &[1.0, 3.0], &cfg).is_err());
}

#[test]
fn mixed_pools_every_window_view() {
    let c = corpus(100, 0.05, 0.3, 5);
    let train_count = c.split(Split::Train).count();
    let (_, rec) = train_mixed(&c, Architecture::Word, &[7.0, 1.0, 3.0], &small_config(0)).unwrap();
    assert_eq!(rec.train_instances, 3 * train_count);
    assert_eq!(rec.windows, vec![1.0, 3.0, 7.0]);
    let (_, base) = train_standard(&c, Architecture::Word, 1.0, &small_config(0)).unwrap();
    assert_eq!(base.train_instances, train_count);
}

#[test]
fn runs_are_bitwise_reproducible() {
    let c = corpus(100, 0.05, 0.3, 6);
    let cfg = small_config(3);
    let (p1, r1) = train_standard(&c, Architecture::Doc, 2.0, &cfg).unwrap();
    let (p2, r2) = train_standard(&c, Architecture::Doc, 2.0, &cfg).unwrap();
    assert!(p1.bitwise_eq(&p2));
    assert_eq!(r1, r2);
    let (p3, _) = train_standard(&c, Architecture::Doc, 2.0, &cfg.with_seed(4)).unwrap();
    assert!(!p1.bitwise_eq(&p3));
}

#[test]
fn selected_epoch_is_first_best() {
    let c = corpus(100, 0.05, 0.3, 7);
    let mut cfg = small_config(0);
    cfg.max_epochs = 6;
    cfg.patience = 6;
    let (_, rec) = train_standard(&c, Architecture::Word, 1.0, &cfg).unwrap();
    let best = rec.epochs.iter().map(|e| e.val_metric).fold(f64::NEG_INFINITY, f64::max);
    let first = rec.epochs.iter().find(|e| e.val_metric == best).unwrap().epoch;
    assert_eq!(rec.selected_epoch, first);
    assert_eq!(rec.validation_metrics["auroc"], best);
}

#[test]
fn early_stopping_respects_patience() {
    let c = corpus(100, 0.0, 0.0, 8);
    let mut cfg = small_config(0);
    cfg.max_epochs = 40;
    cfg.patience = 2;
    let (_, rec) = train_standard(&c, Architecture::Word, 1.0, &cfg).unwrap();
    let last = rec.epochs.last().unwrap().epoch;
    assert!(last <= rec.selected_epoch + 2);
    assert!(last == 40 || last == rec.selected_epoch + 2);
}

#[test]
fn null_signal_is_near_chance() {
    let c = corpus(600, 0.0, 0.0, 9);
    let mut total = 0.0;
    for seed in 0..5 {
        let (_, rec) = train_standard(&c, Architecture::Word, 7.0, &small_config(seed)).unwrap();
        let a = rec.test_metrics["auroc"];
        total += a;
        assert!((0.3..=0.7).contains(&a), "seed {seed}: {a}");
    }
    let mean = total / 5.0;
    assert!((0.4..=0.6).contains(&mean), "mean {mean}");
}

#[test]
fn perfect_signal_is_separable() {
    let c = generate_synthetic(&SynthSpec {
        num_samples: 300,
        rho_early: 1.0,
        rho_late: 1.0,
        noise_rate: 0.0,
        seed: 10,
        ..SynthSpec::default()
    })
    .unwrap();
    let mut cfg = small_config(0);
    cfg.max_epochs = 5;
    cfg.lr = 1e-2;
    let (_, rec) = train_standard(&c, Architecture::Word, 1.0, &cfg).unwrap();
    assert!(rec.test_metrics["auroc"] >= 0.95, "{:?}", rec.test_metrics);
}

#[test]
fn divergence_is_reported() {
    let c = corpus(60, 0.05, 0.3, 11);
    let mut cfg = small_config(0);
    cfg.lr = 1e300;
    let err = train_standard(&c, Architecture::Word, 1.0, &cfg).unwrap_err();
    assert!(matches!(err, Error::Diverged { .. }), "{err}");
}

#[test]
fn empty_split_rejected() {
    let c = corpus(60, 0.05, 0.3, 12);
    let only_train: Vec<_> = c.samples().iter().filter(|s| s.split == Split::Train).cloned().collect();
    let c = Corpus::new(only_train).unwrap();
    assert!(matches!(
        train_standard(&c, Architecture::Word, 1.0, &small_config(0)),
        Err(Error::Corpus(_))
    ));
}

#[test]
fn run_log_is_line_delimited() {
    let c = corpus(80, 0.05, 0.3, 13);
    let (_, rec) = train_lupiet(&c, Architecture::Word, 1.0, 3.0, &small_config(0), &DistillConfig::default()).unwrap();
    let mut buf = Vec::new();
    rec.write_log(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(lines.iter().any(|l| l["scope"] == "run.teacher" && l["record"] == "header"));
    let result = lines.last().unwrap();
    assert_eq!(result["record"], "result");
    assert_eq!(result["scope"], "run");
    assert_eq!(result["selected_epoch"], rec.selected_epoch);
}

#[test]
fn init_is_seed_determined() {
    let cfg = small_config(0);
    let mut m = cfg.model.clone();
    m.vocab_size = 10;
    let a = init_model(Architecture::Word, &m, 1).unwrap();
    let b = init_model(Architecture::Word, &m, 1).unwrap();
    assert_eq!(params_digest(&a), params_digest(&b));
}
