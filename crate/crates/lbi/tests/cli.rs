use std::path::Path;
use std::process::{Command, Output};

use lbi::checkpoint::Checkpoint;
use lbi::io;
use lbi_core::data::EncodedExample;

fn lbi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lbi")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn error_kind(out: &Output) -> String {
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("stderr: {}", String::from_utf8_lossy(&out.stderr)));
    v["error"]["kind"].as_str().unwrap().to_string()
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, r#"{"seed": 3, "synthetic": {"n": 200}, "lbi": {"epochs": 2}, "hypergrad_check": {"instances": 4}}"#).unwrap();
    path
}

#[test]
fn evaluating_on_own_predictions_gives_perfect_scores() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let cfg = small_config(root);
    let (gen, split, train) = (root.join("gen"), root.join("split"), root.join("train"));
    assert!(lbi(&["generate", "--config", s(&cfg), "--out", s(&gen)]).status.success());
    assert!(lbi(&["split", "--config", s(&cfg), "--input", s(&gen.join("dataset.jsonl")), "--out", s(&split)]).status.success());
    assert!(lbi(&["train", "--config", s(&cfg), "--data", s(&split), "--ignoring", "off", "--out", s(&train)]).status.success());

    let ck = Checkpoint::load(&train.join("checkpoint.json")).unwrap();
    let mut test = io::load_dataset(&split.join("test.jsonl")).unwrap();
    let enc: Vec<EncodedExample> = ck.codebook.encode_all(&test).unwrap();
    let refs: Vec<&EncodedExample> = enc.iter().collect();
    let preds = ck.model.dims.predict(&ck.model.params, &refs, true).unwrap();
    for (ex, p) in test.iter_mut().zip(preds) {
        ex.answer = ck.codebook.answer(p).to_string();
    }
    let relabeled = root.join("relabeled.jsonl");
    io::save_dataset(&test, &relabeled).unwrap();

    let out = lbi(&["evaluate", "--config", s(&cfg), "--checkpoint", s(&train.join("checkpoint.json")), "--split", s(&relabeled), "--out", s(&root.join("eval"))]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("n\taccuracy\tbleu1\tbleu2\tbleu3\tf1"));
    let row: Vec<f64> = lines.next().unwrap().split('\t').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[0] as usize, test.len());
    assert!(row[1..].iter().all(|&v| v == 1.0), "{row:?}");
}

#[test]
fn hypergrad_check_passes_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out_dir = tmp.path().join("check");
    let out = lbi(&["hypergrad-check", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = io::read_json(&out_dir.join("hypergrad_report.json")).unwrap();
    assert_eq!(report["passed"], true);
}

#[test]
fn impossible_tolerance_exits_with_tolerance_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("config.json");
    std::fs::write(&cfg, r#"{"hypergrad_check": {"instances": 2, "tolerance": 1e-30}}"#).unwrap();
    let out_dir = tmp.path().join("check");
    let out = lbi(&["hypergrad-check", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_kind(&out), "tolerance");
    assert!(out_dir.join("hypergrad_report.json").exists());
}

#[test]
fn errors_are_json_on_stderr_with_nonzero_exit() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    std::fs::write(&cfg, r#"{"sede": 1}"#).unwrap();
    let out = lbi(&["generate", "--config", s(&cfg), "--out", s(&tmp.path().join("x"))]);
    assert_eq!(out.status.code(), Some(4));
    let msg: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(msg["error"]["message"].as_str().unwrap().contains("sede"));

    let out = lbi(&["corrupt", "--input", "/nonexistent.jsonl", "--out", s(&tmp.path().join("y"))]);
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(error_kind(&out), "io");

    let out = lbi(&["corrupt", "--flip-rate", "1.5", "--input", s(&cfg), "--out", s(&tmp.path().join("z"))]);
    assert!(!out.status.success());
    assert!(serde_json::from_slice::<serde_json::Value>(&out.stderr).is_ok());
}
