use std::path::Path;

use lbi::checkpoint::Checkpoint;
use lbi::config::{parse_config, RunConfig};
use lbi::io;
use lbi::CliError;
use lbi_core::data::{generate_synthetic, Codebook, SyntheticSpec, DEFAULT_VOCAB_CAP};
use lbi_core::lbi::EpochSnapshot;
use lbi_core::models::{TwoTowerDims, TwoTowerModel};
use lbi_core::ssl::CurvePoint;

#[test]
fn dataset_round_trips_through_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/data.jsonl");
    let data = generate_synthetic(&SyntheticSpec { n: 40, seed: 1, ..SyntheticSpec::default() }).unwrap();
    io::save_dataset(&data, &path).unwrap();
    assert_eq!(io::load_dataset(&path).unwrap(), data);
}

#[test]
fn empty_file_is_an_empty_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.jsonl");
    std::fs::write(&path, "\n\n").unwrap();
    assert!(io::load_dataset(&path).unwrap().is_empty());
}

#[test]
fn missing_field_names_field_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.jsonl");
    let data = generate_synthetic(&SyntheticSpec { n: 2, seed: 1, ..SyntheticSpec::default() }).unwrap();
    let mut text = String::from_utf8(io::dataset_bytes(&data[..1])).unwrap();
    text.push_str(r#"{"id": 9, "image_features": [0.0], "question_tokens": ["what"], "question_type": "what"}"#);
    std::fs::write(&path, text).unwrap();
    match io::load_dataset(&path) {
        Err(CliError::Parse { line, detail, .. }) => {
            assert_eq!(line, 2);
            assert!(detail.contains("answer"), "{detail}");
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn missing_file_is_an_io_error() {
    let err = io::load_dataset(Path::new("/nonexistent/data.jsonl")).unwrap_err();
    assert!(matches!(err, CliError::Io { .. }));
    assert_eq!(err.exit_code(), 5);
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate_synthetic(&SyntheticSpec { n: 60, seed: 2, ..SyntheticSpec::default() }).unwrap();
    let book = Codebook::build(&data, DEFAULT_VOCAB_CAP);
    let dims = TwoTowerDims { image_dim: data[0].image_features.len(), vocab: book.vocab.len(), embed: 5, hidden: 7, classes: book.answers.len() };
    let ck = Checkpoint::new(TwoTowerModel::new(dims, 3).unwrap(), book, "abc".into());
    let path = dir.path().join("ck.json");
    io::write_bytes(&path, &ck.to_bytes()).unwrap();
    assert_eq!(Checkpoint::load(&path).unwrap(), ck);
}

#[test]
fn checkpoint_with_wrong_format_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate_synthetic(&SyntheticSpec { n: 20, seed: 2, ..SyntheticSpec::default() }).unwrap();
    let book = Codebook::build(&data, DEFAULT_VOCAB_CAP);
    let dims = TwoTowerDims { image_dim: data[0].image_features.len(), vocab: book.vocab.len(), embed: 2, hidden: 2, classes: book.answers.len() };
    let mut ck = Checkpoint::new(TwoTowerModel::new(dims, 3).unwrap(), book, String::new());
    ck.format = "something-else".into();
    let path = dir.path().join("ck.json");
    io::write_bytes(&path, &ck.to_bytes()).unwrap();
    assert!(matches!(Checkpoint::load(&path), Err(CliError::Format { .. })));
}

#[test]
fn config_rejects_unknown_keys_and_fills_defaults() {
    let origin = Path::new("cfg.json");
    assert!(matches!(parse_config(r#"{"seed": 1, "lbi": {"epoch": 3}}"#, origin), Err(CliError::Parse { .. })));
    let cfg = parse_config(r#"{"seed": 4}"#, origin).unwrap();
    assert_eq!(cfg.seed, 4);
    assert_eq!(cfg.lbi, RunConfig::default().lbi);
}

#[test]
fn resolved_config_is_deterministic_and_seed_sensitive() {
    let a = RunConfig::default().with_seed(1).unwrap();
    let b = RunConfig::default().with_seed(1).unwrap();
    let c = RunConfig::default().with_seed(2).unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), c.hash());
    assert_ne!(a.synthetic.seed, a.split.seed);
}

#[test]
fn csv_headers() {
    let snap = EpochSnapshot { epoch: 1, a: vec![0.25, 0.75], losses: vec![1.0, 2.0], train_loss: 0.0, val_loss: 0.0 };
    let text = String::from_utf8(io::trace_csv(std::slice::from_ref(&snap), &[10, 11], Some(&[true, false]))).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("epoch,example_id,a,loss,corrupted"));
    assert_eq!(lines.count(), 2);
    let text = String::from_utf8(io::trace_csv(&[snap], &[10, 11], None)).unwrap();
    assert_eq!(text.lines().next(), Some("epoch,example_id,a,loss"));

    let curve = CurvePoint { epoch: 0, loss_iq: Some(0.7), loss_ia: None, loss_qa: Some(1.0), loss_joint: 1.7 };
    let text = String::from_utf8(io::curves_csv(&[curve])).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "epoch,loss_iq,loss_ia,loss_qa,loss_joint");
    assert_eq!(lines[1], "0,0.7,,1,1.7");
}

#[test]
fn svg_plots_are_well_formed() {
    let svg = String::from_utf8(io::line_plot_svg("loss", "epoch", &[("train", vec![3.0, 2.0, 1.0])])).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    let svg = String::from_utf8(io::histogram_svg("a", &[0.1, 0.2, 0.9], Some(&[true, true, false]), 10)).unwrap();
    assert!(svg.trim_end().ends_with("</svg>"));
}
