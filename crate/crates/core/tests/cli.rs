use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lupiet_core::corpus::{load_corpus, Split};
use lupiet_core::models::load_checkpoint;

fn lupiet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lupiet")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"
output_dir = "out"
seeds = [0, 1]
windows = [3.0, 7.0]

[corpus.synth]
num_samples = 120
seed = 4

[train]
max_epochs = 2
batch_size = 16

[train.model]
embed_dim = 6
filter_widths = [3]
filters = 4
"#;

fn write_config(dir: &Path, extra_top: &str, body: &str) -> String {
    let path = dir.join("experiment.toml");
    fs::write(&path, format!("{extra_top}{body}")).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn gen_data_prints_split_counts() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.toml");
    fs::write(&spec, "num_samples = 1000\nsplit_ratio = [0.8, 0.1, 0.1]\nseed = 3\n").unwrap();
    let out = dir.path().join("corpus.jsonl");
    let o = lupiet(&["gen-data", "--spec", spec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("800\t100\t100"), "{}", stdout(&o));
    let corpus = load_corpus(&out).unwrap();
    assert_eq!(corpus.len(), 1000);
    assert_eq!(corpus.split(Split::Validation).count(), 100);
}

#[test]
fn gen_data_invalid_spec_leaves_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.toml");
    fs::write(&spec, "num_samples = 10\nrho_late = 1.5\n").unwrap();
    let out = dir.path().join("corpus.jsonl");
    let o = lupiet(&["gen-data", "--spec", spec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn train_baseline_writes_one_checkpoint_and_record_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "", SMALL);
    let o = lupiet(&["train", "--config", &cfg, "--strategy", "baseline"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("strategy,window,seed_count,metric,mean,std\n"));
    for seed in ["0", "1"] {
        let d = dir.path().join("out/baseline").join(seed);
        let files: Vec<_> = fs::read_dir(&d).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(files.len(), 2, "{files:?}");
        let (params, hash) = load_checkpoint(d.join("1.ckpt")).unwrap();
        assert!(params.all_finite());
        let log = fs::read_to_string(d.join("1.run.jsonl")).unwrap();
        assert!(log.contains(&hash));
    }
    assert!(dir.path().join("out/baseline/metrics.csv").exists());

    let o = lupiet(&["train", "--config", &cfg, "--strategy", "mixed", "--seed", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("out/mixed/1/1_3_7.ckpt").exists());
    assert!(!dir.path().join("out/mixed/0").exists());
}

#[test]
fn unknown_strategy_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "", SMALL);
    let o = lupiet(&["train", "--config", &cfg, "--strategy", "magic"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown strategy"));
    assert_eq!(lupiet(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn invalid_config_reports_field_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL.replace("windows = [3.0, 7.0]", "windows = [7.0, 3.0]");
    let cfg = write_config(dir.path(), "", &body);
    let o = lupiet(&["compare", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("windows[1]"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());

    let cfg = write_config(dir.path(), "[distill]\nalpha = [0.5, 2.0]\n", "");
    let o = lupiet(&["train", "--config", &cfg, "--strategy", "lupiet"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("distill.alpha[1]"), "{}", stderr(&o));
}

#[test]
fn lupiet_grid_search_then_all_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL.replace("windows = [3.0, 7.0]", "windows = [3.0]");
    let grid = "[distill]\ntau = [1.0, 2.0, 4.0]\nalpha = [0.1, 0.5, 0.9]\n";
    let cfg = write_config(dir.path(), "", &format!("{body}{grid}"));
    let o = lupiet(&["train", "--config", &cfg, "--strategy", "lupiet"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let grid_csv = fs::read_to_string(dir.path().join("out/lupiet/grid-3-1.csv")).unwrap();
    let lines: Vec<&str> = grid_csv.lines().skip(1).collect();
    assert_eq!(lines.len(), 9);
    assert_eq!(lines.iter().filter(|l| l.ends_with(",true")).count(), 1);
    let winner: Vec<&str> = lines.iter().find(|l| l.ends_with(",true")).unwrap().split(',').collect();
    for seed in ["0", "1"] {
        let log = fs::read_to_string(dir.path().join("out/lupiet").join(seed).join("3-1.run.jsonl")).unwrap();
        let header: serde_json::Value = log
            .lines()
            .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
            .find(|v| v["scope"] == "run" && v["record"] == "header")
            .unwrap();
        assert_eq!(header["distill"]["tau"].as_f64().unwrap().to_string(), winner[0]);
        assert_eq!(header["distill"]["alpha"].as_f64().unwrap().to_string(), winner[1]);
    }
}

#[test]
fn compare_is_reproducible_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "", SMALL);
    let o = lupiet(&["compare", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = fs::read(dir.path().join("out/comparison.csv")).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    let rows: Vec<(String, String)> = text
        .lines()
        .skip(1)
        .filter(|l| l.contains(",auroc,"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_owned(), f[1].to_owned())
        })
        .collect();
    let expected = [
        ("baseline", "1"),
        ("lupiet", "3->1"),
        ("lupiet", "7->1"),
        ("transfer", "3->1"),
        ("transfer", "7->1"),
        ("transfer", "7->3->1"),
        ("mixed", "1+3+7"),
    ];
    let expected: Vec<(String, String)> = expected.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    assert_eq!(rows, expected);
    assert!(fs::read_to_string(dir.path().join("out/comparison.txt")).unwrap().contains("("));

    let o = lupiet(&["compare", "--config", &cfg, "--jobs", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(dir.path().join("out/comparison.csv")).unwrap(), first);
}

#[test]
fn compare_baseline_and_lupiet_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "strategies = [\"lupiet\"]\n", SMALL);
    let o = lupiet(&["compare", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("out/comparison.csv")).unwrap();
    let auroc_rows = text.lines().filter(|l| l.contains(",auroc,")).count();
    assert_eq!(auroc_rows, 1 + 2);
}

#[test]
fn curve_table_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL.replace("num_samples = 120", "num_samples = 200");
    let cfg = write_config(dir.path(), "", &body);
    let o = lupiet(&["curve", "--config", &cfg, "--ratios", "0.1,0.25,0.5,1.0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/curve.csv")).unwrap();
    assert!(csv.starts_with("ratio,strategy,window,seed_count,metric,mean,std\n"));
    assert_eq!(csv.lines().filter(|l| l.contains(",auroc,")).count(), 4 * 3);
    assert!(stdout(&o).lines().last().unwrap().starts_with("gap auroc"));
    let o = lupiet(&["curve", "--config", &cfg, "--ratios", "0.0,1.0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn divergence_exits_nonzero_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL.replace("batch_size = 16", "batch_size = 16\nlr = 1e300");
    let cfg = write_config(dir.path(), "", &body);
    let o = lupiet(&["train", "--config", &cfg, "--strategy", "baseline", "--seed", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let diag = fs::read_to_string(dir.path().join("out/baseline/0/1.error.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&diag).unwrap();
    assert!(v["diverged"]["epoch"].is_u64());
}
