use std::path::Path;
use std::process::{Command, Output};

use qdnn::data::{encode_idx, IdxRecords, IMAGE_PIXELS, TEST_IMAGES, TEST_LABELS, TRAIN_IMAGES, TRAIN_LABELS};

fn qdnn(args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qdnn"));
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("QDNN_")) {
        cmd.env_remove(k);
    }
    cmd.args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Zeros are bright on the left, ones on the right.
fn write_split(dir: &Path, images: &str, labels: &str, n: usize, salt: usize) {
    let mut pixels = Vec::with_capacity(n * IMAGE_PIXELS);
    let mut l = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % 3 == 0) as u8 + if i % 5 == 4 { 6 } else { 0 };
        l.push(label);
        for p in 0..IMAGE_PIXELS {
            let left = p % 28 < 14;
            let lit = (label == 0) == left;
            let noise = ((p * 31 + i * 17 + salt) % 40) as u8;
            pixels.push(if lit { 200 + noise } else { noise });
        }
    }
    std::fs::write(dir.join(images), encode_idx(&IdxRecords::Images { rows: 28, cols: 28, pixels })).unwrap();
    std::fs::write(dir.join(labels), encode_idx(&IdxRecords::Labels(l))).unwrap();
}

fn synthetic_data() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_split(dir.path(), TRAIN_IMAGES, TRAIN_LABELS, 30, 0);
    write_split(dir.path(), TEST_IMAGES, TEST_LABELS, 12, 5);
    dir
}

fn train(data: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "train",
        "--data-dir",
        data.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "--batch",
        "5",
        "--switch-at",
        "2",
        "--eval-every",
        "2",
        "--checkpoint-every",
        "2",
        "--seed",
        "11",
    ];
    if !extra.contains(&"--iterations") {
        args.extend_from_slice(&["--iterations", "4"]);
    }
    args.extend_from_slice(extra);
    qdnn(&args)
}

#[test]
fn missing_data_dir_exits_with_two() {
    let o = qdnn(&["train", "--iterations", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--data-dir"));
}

#[test]
fn train_writes_metrics_and_checkpoints() {
    let data = synthetic_data();
    let out = tempfile::tempdir().unwrap();
    let o = train(data.path(), out.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("final test accuracy"));
    let csv = std::fs::read_to_string(out.path().join("metrics.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "iteration,train_loss,test_loss,test_accuracy,eta");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("0,,"));
    assert!(lines[2].ends_with(",,,0.01"));
    assert!(lines[5].starts_with("4,") && lines[5].ends_with(",0.001"));
    for step in [2, 4] {
        assert!(out.path().join(format!("checkpoint-{step:06}.json")).exists());
    }
    assert!(!out.path().join("checkpoint-000000.json").exists());
}

#[test]
fn eval_matches_final_log_row() {
    let data = synthetic_data();
    let out = tempfile::tempdir().unwrap();
    assert!(train(data.path(), out.path(), &[]).status.success());
    let csv = std::fs::read_to_string(out.path().join("metrics.csv")).unwrap();
    let last: Vec<&str> = csv.lines().last().unwrap().split(',').collect();
    let ck = out.path().join("checkpoint-000004.json");
    let o = qdnn(&["eval", "--checkpoint", ck.to_str().unwrap(), "--data-dir", data.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], last[0]);
    assert_eq!(row[1], "test");
    assert_eq!(row[2], last[2]);
    assert_eq!(row[3], last[3]);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let data = synthetic_data();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(train(data.path(), a.path(), &["--threads", "1"]).status.success());
    assert!(train(data.path(), b.path(), &["--threads", "3"]).status.success());
    for f in ["metrics.csv", "checkpoint-000002.json", "checkpoint-000004.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
}

#[test]
fn zero_iterations_write_the_initial_checkpoint() {
    let data = synthetic_data();
    let out = tempfile::tempdir().unwrap();
    let o = train(data.path(), out.path(), &["--iterations", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.path().join("checkpoint-000000.json").exists());
}

#[test]
fn flag_beats_env_beats_config() {
    let data = synthetic_data();
    let out = tempfile::tempdir().unwrap();
    let cfg = out.path().join("run.toml");
    std::fs::write(&cfg, "iterations = 3\nbatch = 4\ncheckpoint_every = 0\n").unwrap();
    let run = |env_iters: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_qdnn"));
        cmd.args(["train", "--data-dir", data.path().to_str().unwrap(), "--out-dir"])
            .arg(out.path())
            .arg("--config")
            .arg(&cfg);
        if let Some(v) = env_iters {
            cmd.env("QDNN_ITERATIONS", v);
        } else {
            cmd.env_remove("QDNN_ITERATIONS");
        }
        if let Some(v) = flag {
            cmd.args(["--iterations", v]);
        }
        let o = cmd.output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        stdout(&o)
    };
    assert!(run(None, None).contains("after 3 iterations"));
    assert!(run(Some("2"), None).contains("after 2 iterations"));
    assert!(run(Some("2"), Some("1")).contains("after 1 iterations"));
}

#[test]
fn bad_checkpoints_fail() {
    let data = synthetic_data();
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{\"format_version\": 1, \"architecture\": [").unwrap();
    let o = qdnn(&["eval", "--checkpoint", junk.to_str().unwrap(), "--data-dir", data.path().to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));

    let out = tempfile::tempdir().unwrap();
    assert!(train(data.path(), out.path(), &["--iterations", "0"]).status.success());
    let text = std::fs::read_to_string(out.path().join("checkpoint-000000.json")).unwrap();
    let future = dir.path().join("future.json");
    std::fs::write(&future, text.replacen("\"format_version\": 1", "\"format_version\": 9", 1)).unwrap();
    let o = qdnn(&["eval", "--checkpoint", future.to_str().unwrap(), "--data-dir", data.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("version 9") && err.contains("version 1"), "{err}");
}

#[test]
fn gradcheck_is_deterministic_and_passes() {
    let a = qdnn(&["gradcheck", "--seed", "5", "--jobs", "10"]);
    let b = qdnn(&["gradcheck", "--seed", "5", "--jobs", "10"]);
    assert!(a.status.success(), "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("status: ok"));
    let s = qdnn(&["gradcheck", "--seed", "5", "--jobs", "3", "--engine", "shift", "--layers", "mnist"]);
    assert!(s.status.success());
    assert!(stdout(&s).contains("engine shift"));
}

#[test]
fn gradcheck_reports_a_breach() {
    // a coarse step makes the central difference miss the 1e-6 bound
    let o = qdnn(&["gradcheck", "--seed", "5", "--jobs", "10", "--layers", "none", "--fd-step", "0.01"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAILED"));
}

#[test]
fn approx_demo_is_exact() {
    let o = qdnn(&["approx-demo"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for key in ["monomial max error", "cosine max error"] {
        let line = text.lines().find(|l| l.starts_with(key)).unwrap();
        let v: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
        assert!(v <= 1e-12);
    }
}
