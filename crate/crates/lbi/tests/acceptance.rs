//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use lbi::config::RunConfig;
use lbi::experiment::{prepare, run_condition, Condition, ConditionResult};
use lbi_core::data::{generate_synthetic, stratified_split, Codebook, EncodedExample, QuestionType, SplitSpec, SyntheticSpec, VqaExample, DEFAULT_VOCAB_CAP};
use lbi_core::diffcore::{AdamConfig, ParameterSet};
use lbi_core::lbi::{hypergrad_exact, hypergrad_fd_detailed, weighted_train_loss, weighted_train_loss_grad, EpsScaling};
use lbi_core::metrics::{bleu_n, exact_match_accuracy, macro_token_f1};
use lbi_core::models::{ClassExample, LeastSquares, MlpClassifier, MlpDims, Objective, RegressionExample, TwoTowerDims, TwoTowerModel};
use lbi_core::rng::{self, Rng};
use lbi_core::ssl::MatchPair;
use rand::Rng as _;

type Outcome = Result<String, String>;

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

// ---------------------------------------------------------------- oracles

/// Central differences of `f` over every coordinate of `p`.
fn numeric_grad(p: &ParameterSet, step: f64, mut f: impl FnMut(&ParameterSet) -> f64) -> Vec<f64> {
    let flat = p.flatten();
    (0..flat.len())
        .map(|k| {
            let mut q = flat.clone();
            q[k] = flat[k] + step;
            let up = f(&p.unflatten(&q).unwrap());
            q[k] = flat[k] - step;
            let down = f(&p.unflatten(&q).unwrap());
            (up - down) / (2.0 * step)
        })
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Hypergradient of least squares by hand: `W' = W − ξ Σ a_i r_i x_i` with
/// `r_i = W·x_i − y_i`, so `∂L_val/∂a_i = −ξ r_i (x_i · Σ_v (W'·x_v − y_v) x_v)`.
fn least_squares_hypergrad(w: &[f64], a: &[f64], train: &[RegressionExample], val: &[RegressionExample], xi: f64) -> Vec<f64> {
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
    let r: Vec<f64> = train.iter().map(|t| dot(w, &t.x) - t.y).collect();
    let mut w1 = w.to_vec();
    for (i, t) in train.iter().enumerate() {
        for (k, x) in t.x.iter().enumerate() {
            w1[k] -= xi * a[i] * r[i] * x;
        }
    }
    let mut gv = vec![0.0; w.len()];
    for v in val {
        let rv = dot(&w1, &v.x) - v.y;
        for (k, x) in v.x.iter().enumerate() {
            gv[k] += rv * x;
        }
    }
    train.iter().enumerate().map(|(i, t)| -xi * r[i] * dot(&t.x, &gv)).collect()
}

// ---------------------------------------------------------------- criteria

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut r = rng::seeded(101);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let dim = |r: &mut Rng| r.random_range(1..=8usize);
        let (analytic, numeric) = if trial % 2 == 0 {
            let dims = MlpDims { input: dim(&mut r), hidden: dim(&mut r), classes: dim(&mut r) };
            let p = MlpClassifier::new(dims, r.random()).unwrap().params;
            let batch: Vec<ClassExample> = (0..r.random_range(1..6))
                .map(|_| ClassExample {
                    features: (0..dims.input).map(|_| r.random_range(-2.0..2.0)).collect(),
                    label: r.random_range(0..dims.classes),
                })
                .collect();
            let refs: Vec<&ClassExample> = batch.iter().collect();
            let wts: Vec<f64> = refs.iter().map(|_| r.random_range(0.1..1.0)).collect();
            let g = dims.weighted_grad(&p, &refs, &wts).unwrap().1.flatten();
            let n = numeric_grad(&p, 1e-5, |q| {
                dims.losses(q, &refs).unwrap().as_slice().iter().zip(&wts).map(|(l, w)| l * w).sum()
            });
            (g, n)
        } else {
            let dims = TwoTowerDims {
                image_dim: dim(&mut r),
                vocab: dim(&mut r) + 1,
                embed: dim(&mut r),
                hidden: dim(&mut r),
                classes: dim(&mut r),
            };
            let model = TwoTowerModel::new(dims, r.random()).unwrap();
            let image = |r: &mut Rng| (0..dims.image_dim).map(|_| r.random_range(-2.0..2.0)).collect::<Vec<f64>>();
            let text = |r: &mut Rng| (0..r.random_range(1..4)).map(|_| r.random_range(0..dims.vocab as u32)).collect::<Vec<u32>>();
            if trial % 4 == 1 {
                let batch: Vec<EncodedExample> = (0..r.random_range(1..5))
                    .map(|i| EncodedExample {
                        id: i,
                        image: image(&mut r),
                        question: text(&mut r),
                        answer_tokens: vec![],
                        answer_class: r.random_range(0..dims.classes),
                        question_type: QuestionType::What,
                        corrupted: None,
                    })
                    .collect();
                let refs: Vec<&EncodedExample> = batch.iter().collect();
                let obj = model.answer_objective(true);
                let wts: Vec<f64> = refs.iter().map(|_| r.random_range(0.1..1.0)).collect();
                let g = obj.weighted_grad(&model.params, &refs, &wts).unwrap().1.flatten();
                let n = numeric_grad(&model.params, 1e-5, |q| {
                    obj.losses(q, &refs).unwrap().as_slice().iter().zip(&wts).map(|(l, w)| l * w).sum()
                });
                (g, n)
            } else {
                let batch: Vec<MatchPair> = (0..r.random_range(1..5))
                    .map(|i| MatchPair {
                        image: image(&mut r),
                        text: text(&mut r),
                        label: f64::from(r.random_range(0..2u8)),
                        left_id: i,
                        right_id: i,
                    })
                    .collect();
                let refs: Vec<&MatchPair> = batch.iter().collect();
                let obj = model.match_objective();
                let wts: Vec<f64> = refs.iter().map(|_| r.random_range(0.1..1.0)).collect();
                let g = obj.weighted_grad(&model.params, &refs, &wts).unwrap().1.flatten();
                let n = numeric_grad(&model.params, 1e-5, |q| {
                    obj.losses(q, &refs).unwrap().as_slice().iter().zip(&wts).map(|(l, w)| l * w).sum()
                });
                (g, n)
            }
        };
        for (a, n) in analytic.iter().zip(&numeric) {
            worst = worst.max(rel(*a, *n));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("100 models, max relative error {worst:.2e}, {secs:.1}s");
    if worst < 1e-4 && secs < 30.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn hypergradient_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng::seeded(202);
    let (xi, eps) = (0.1, 1e-4);
    let mut worst: f64 = 0.0;
    let mut oracle_vs_hand: f64 = 0.0;
    let mut compared = 0usize;
    for k in 0..50 {
        let dim = r.random_range(1..=4usize);
        let n_train = r.random_range(1..=10usize);
        let n_val = r.random_range(1..=5usize);
        let a: Vec<f64> = (0..n_train).map(|_| r.random_range(0.05..0.95)).collect();
        let (fd, exact) = if k % 2 == 0 {
            let obj = LeastSquares { dim };
            let w: Vec<f64> = (0..dim).map(|_| rng::normal(&mut r)).collect();
            let draw = |r: &mut Rng| RegressionExample { x: (0..dim).map(|_| rng::normal(r)).collect(), y: rng::normal(r) };
            let train: Vec<_> = (0..n_train).map(|_| draw(&mut r)).collect();
            let val: Vec<_> = (0..n_val).map(|_| draw(&mut r)).collect();
            let (tr, va): (Vec<_>, Vec<_>) = (train.iter().collect(), val.iter().collect());
            let p = obj.params(&w).unwrap();
            let fd = hypergrad_fd_detailed(&obj, &p, &a, &tr, &va, xi, eps, EpsScaling::GradNorm).unwrap().grad;
            let exact = hypergrad_exact(&obj, &p, &a, &tr, &va, xi).unwrap();
            for (e, h) in exact.iter().zip(least_squares_hypergrad(&w, &a, &train, &val, xi)) {
                if h.abs() > 1e-8 {
                    oracle_vs_hand = oracle_vs_hand.max((e - h).abs() / h.abs());
                }
            }
            (fd, exact)
        } else {
            let dims = MlpDims { input: dim, hidden: r.random_range(1..=4), classes: r.random_range(2..=4) };
            let p = MlpClassifier::new(dims, r.random()).unwrap().params;
            let draw = |r: &mut Rng| ClassExample {
                features: (0..dim).map(|_| rng::normal(r)).collect(),
                label: r.random_range(0..dims.classes),
            };
            let train: Vec<_> = (0..n_train).map(|_| draw(&mut r)).collect();
            let val: Vec<_> = (0..n_val).map(|_| draw(&mut r)).collect();
            let (tr, va): (Vec<_>, Vec<_>) = (train.iter().collect(), val.iter().collect());
            let fd = hypergrad_fd_detailed(&dims, &p, &a, &tr, &va, xi, eps, EpsScaling::GradNorm).unwrap().grad;
            (fd, hypergrad_exact(&dims, &p, &a, &tr, &va, xi).unwrap())
        };
        for (f, e) in fd.iter().zip(&exact) {
            if e.abs() > 1e-8 {
                worst = worst.max((f - e).abs() / e.abs());
                compared += 1;
            }
        }
    }

    // one training and one validation point (x = 1, y = 1) at W = 0, a = 1, ξ = 0.1
    let obj = LeastSquares { dim: 1 };
    let one = RegressionExample { x: vec![1.0], y: 1.0 };
    let p = obj.params(&[0.0]).unwrap();
    let hand = least_squares_hypergrad(&[0.0], &[1.0], std::slice::from_ref(&one), std::slice::from_ref(&one), 0.1)[0];
    let fd = hypergrad_fd_detailed(&obj, &p, &[1.0], &[&one], &[&one], 0.1, eps, EpsScaling::GradNorm).unwrap().grad[0];
    let closed_ok = (hand + 0.09).abs() < 1e-12 && (fd + 0.09).abs() < 1e-9;

    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "50 instances, {compared} components, max rel dev {worst:.2e}; oracle vs hand-derived {oracle_vs_hand:.2e}; 1-D case fd {fd:.6} (hand {hand:.6}); {secs:.1}s"
    );
    if worst < 1e-2 && oracle_vs_hand < 1e-4 && closed_ok && secs < 60.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn analytic_identity() -> Outcome {
    let raw = generate_synthetic(&SyntheticSpec { n: 400, seed: 9, ..SyntheticSpec::default() }).unwrap();
    let book = Codebook::build(&raw, DEFAULT_VOCAB_CAP);
    let enc = book.encode_all(&raw).unwrap();
    let dims = TwoTowerDims { image_dim: 16, vocab: book.vocab.len(), embed: 8, hidden: 16, classes: book.answers.len() };
    let model = TwoTowerModel::new(dims, 3).unwrap();
    let obj = model.answer_objective(true);
    let mut r = rng::seeded(303);
    let mut worst: f64 = 0.0;
    let mut batches = 0;
    for chunk in enc.chunks(16) {
        let refs: Vec<&EncodedExample> = chunk.iter().collect();
        let losses = obj.losses(&model.params, &refs).unwrap().into_vec();
        let n_a = 2 * refs.len();
        let a: Vec<f64> = (0..n_a).map(|_| r.random()).collect();
        // the batch occupies shuffled global slots
        let mut ids: Vec<usize> = (0..n_a).collect();
        rand::seq::SliceRandom::shuffle(ids.as_mut_slice(), &mut r);
        ids.truncate(refs.len());
        let (value, grad) = weighted_train_loss_grad(&a, &ids, &losses).unwrap();
        let direct: f64 = ids.iter().zip(&losses).map(|(&i, l)| a[i] * l).sum();
        worst = worst.max((value - direct).abs()).max((weighted_train_loss(&a, &ids, &losses).unwrap() - direct).abs());
        for (g, l) in grad.iter().zip(&losses) {
            worst = worst.max((g - l).abs());
        }
        batches += 1;
    }
    let detail = format!("{batches} batches, max |grad_a - L| {worst:.1e}");
    if worst <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// The configuration of the corrupted benchmark runs.
fn benchmark_config(label_fraction: f64) -> RunConfig {
    let mut cfg = RunConfig { label_fraction, ..RunConfig::default() };
    cfg.synthetic.n = 2000;
    cfg.corruption.label_flip_rate = 0.3;
    cfg.lbi.epochs = 60;
    cfg.lbi.ignoring_opt = AdamConfig { lr: 0.1, beta1: 0.5, beta2: 0.999, eps: 1e-8, weight_decay: 3e-4 };
    cfg
}

struct SeedRun {
    results: Vec<ConditionResult>,
    initial_iq: Option<f64>,
    elapsed: Duration,
}

fn run_seeds(label_fraction: f64, conditions: &[Condition]) -> Vec<SeedRun> {
    SEEDS
        .iter()
        .map(|&seed| {
            let start = Instant::now();
            let cfg = benchmark_config(label_fraction).with_seed(seed).unwrap();
            let data = prepare(&cfg).unwrap();
            let mut results = Vec::new();
            let mut initial_iq = None;
            for &c in conditions {
                let (res, out) = run_condition(&cfg, &data, c).unwrap();
                if c.pretraining {
                    initial_iq = out.pretrain_curves.first().and_then(|p| p.loss_iq);
                }
                results.push(res);
            }
            SeedRun { results, initial_iq, elapsed: start.elapsed() }
        })
        .collect()
}

fn mean_accuracy(runs: &[SeedRun], c: Condition) -> f64 {
    let v: Vec<f64> = runs.iter().flat_map(|s| &s.results).filter(|r| r.condition == c).map(|r| r.report.accuracy).collect();
    v.iter().sum::<f64>() / v.len() as f64
}

const BASELINE: Condition = Condition { ignoring: false, pretraining: false };
const IGNORING: Condition = Condition { ignoring: true, pretraining: false };
const PRETRAINING: Condition = Condition { ignoring: false, pretraining: true };
const BOTH: Condition = Condition { ignoring: true, pretraining: true };

fn corruption_detection(runs: &[SeedRun]) -> Outcome {
    let mut good = 0;
    let mut parts = Vec::new();
    for run in runs {
        let d = run.results.iter().find(|r| r.condition == IGNORING).and_then(|r| r.detection).expect("ignoring run has detection");
        if d.auc >= 0.8 && d.gap() >= 0.1 {
            good += 1;
        }
        parts.push(format!("auc {:.3} gap {:.3}", d.auc, d.gap()));
    }
    let slowest = runs.iter().map(|r| r.elapsed).max().unwrap().as_secs_f64();
    let detail = format!("{good}/5 seeds meet AUC >= 0.8 and gap >= 0.1 [{}]; slowest seed {slowest:.1}s", parts.join("; "));
    if good >= 4 && slowest < 600.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn generalization(runs: &[SeedRun]) -> Outcome {
    let (b, i) = (mean_accuracy(runs, BASELINE), mean_accuracy(runs, IGNORING));
    let detail = format!("mean test accuracy baseline {b:.4}, with ignoring {i:.4}");
    if i - b > 0.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn pretraining_helps(runs: &[SeedRun]) -> Outcome {
    let (b, p) = (mean_accuracy(runs, BASELINE), mean_accuracy(runs, PRETRAINING));
    let ln2 = std::f64::consts::LN_2;
    let initial: Vec<f64> = runs.iter().map(|r| r.initial_iq.expect("pretraining curve")).collect();
    let calibrated = initial.iter().all(|l| (l - ln2).abs() <= 0.15);
    let slowest = runs.iter().map(|r| r.elapsed).max().unwrap().as_secs_f64();
    let detail = format!(
        "10% labels: scratch {b:.4}, joint pretraining {p:.4}; initial IQ loss {:?}; slowest seed (4 conditions) {slowest:.1}s",
        initial.iter().map(|l| (l * 1000.0).round() / 1000.0).collect::<Vec<_>>()
    );
    if p - b > 0.0 && calibrated && slowest < 900.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ablation_order(runs: &[SeedRun]) -> Outcome {
    let (b, i, p, both) =
        (mean_accuracy(runs, BASELINE), mean_accuracy(runs, IGNORING), mean_accuracy(runs, PRETRAINING), mean_accuracy(runs, BOTH));
    let detail = format!("baseline {b:.4}, ignoring {i:.4}, pretraining {p:.4}, pretraining+ignoring {both:.4}");
    if both >= i && both >= p && i >= b && p >= b && both > b {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn metrics_suite() -> Outcome {
    let start = Instant::now();
    let checks = [
        ("identical accuracy", exact_match_accuracy(&["a", "b"], &["a", "b"]).unwrap() == 1.0),
        ("disjoint accuracy", exact_match_accuracy(&["a", "b"], &["c", "d"]).unwrap() == 0.0),
        ("yes/no accuracy", exact_match_accuracy(&["yes", "no"], &["yes", "yes"]).unwrap() == 0.5),
        ("identical F1", macro_token_f1(&["cell wall"], &["cell wall"]).unwrap() == 1.0),
        // P = 1/2, R = 1 ⇒ 2·(1/2)·1 / (3/2)
        ("F1 2/3", macro_token_f1(&["cell wall"], &["wall"]).unwrap() == 2.0 * 0.5 / 1.5),
        ("empty prediction F1", macro_token_f1(&[""], &["wall"]).unwrap() == 0.0),
        ("identical BLEU", (1..=3).all(|n| bleu_n(&["a b c"], &["a b c"], n).unwrap() == 1.0)),
        // one "the" of three candidates is matched, c = 3 > r = 2
        ("clipped BLEU-1", bleu_n(&["the the the"], &["the cat"], 1).unwrap() == 1.0 / 3.0),
        ("zero-overlap BLEU", bleu_n(&["yes"], &["no"], 1).unwrap() == 0.0),
        ("length mismatch", exact_match_accuracy(&["a"], &["a", "b"]).is_err() && macro_token_f1(&["a"], &["a", "b"]).is_err()),
    ];
    let failed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    let secs = start.elapsed().as_secs_f64();
    if failed.is_empty() && secs < 1.0 {
        Ok(format!("{} cases exact, {:.1}ms", checks.len(), secs * 1e3))
    } else {
        Err(format!("failed: {failed:?}"))
    }
}

fn split_protocol() -> Outcome {
    let mut worst_dev: f64 = 0.0;
    for seed in 0..20u64 {
        let data = generate_synthetic(&SyntheticSpec { n: 1000, seed: 500 + seed, ..SyntheticSpec::default() }).unwrap();
        let split = stratified_split(&data, &SplitSpec { seed, ..SplitSpec::default() }).unwrap();
        if (split.train.len(), split.val.len(), split.test.len()) != (600, 200, 200) {
            return Err(format!("seed {seed}: sizes {}/{}/{}", split.train.len(), split.val.len(), split.test.len()));
        }
        let count = |part: &[VqaExample]| {
            let mut m: BTreeMap<QuestionType, usize> = BTreeMap::new();
            for e in part {
                *m.entry(e.question_type).or_default() += 1;
            }
            m
        };
        let total = count(&data);
        let mut ids: Vec<u64> = [&split.train, &split.val, &split.test].iter().flat_map(|p| p.iter().map(|e| e.id)).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != data.len() {
            return Err(format!("seed {seed}: splits are not a partition"));
        }
        for (part, share) in [(&split.train, 0.6), (&split.val, 0.2), (&split.test, 0.2)] {
            let got = count(part);
            for (t, &n) in &total {
                let dev = (got.get(t).copied().unwrap_or(0) as f64 - share * n as f64).abs();
                worst_dev = worst_dev.max(dev);
            }
        }
    }
    let detail = format!("20 seeds, sizes 600/200/200, max per-category deviation {worst_dev:.2} examples");
    if worst_dev <= 1.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_lbi")).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("lbi {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))
    }
}

fn manifest(dir: &Path) -> Result<serde_json::Value, String> {
    let text = std::fs::read_to_string(dir.join("manifest.json")).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = tmp.path();
    let config = root.join("config.json");
    std::fs::write(
        &config,
        r#"{"seed": 7, "synthetic": {"n": 300}, "label_fraction": 0.5,
            "lbi": {"epochs": 3, "train_batch": 32, "val_batch": 32},
            "pretrain": {"epochs": 2, "batch_size": 64},
            "hypergrad_check": {"instances": 4}}"#,
    )
    .map_err(|e| e.to_string())?;
    let c = config.to_str().unwrap();
    let p = |run: usize, name: &str| root.join(format!("r{run}")).join(name).to_string_lossy().into_owned();
    let mut compared = Vec::new();
    for run in 0..2 {
        let steps: Vec<(&str, Vec<String>)> = vec![
            ("generate", vec!["generate".into(), "--config".into(), c.into(), "--out".into(), p(run, "generate")]),
            ("split", vec!["split".into(), "--config".into(), c.into(), "--input".into(), p(run, "generate/dataset.jsonl"), "--out".into(), p(run, "split")]),
            ("corrupt", vec!["corrupt".into(), "--config".into(), c.into(), "--input".into(), p(run, "split/train.jsonl"), "--out".into(), p(run, "corrupt")]),
            ("pretrain", vec!["pretrain".into(), "--config".into(), c.into(), "--data".into(), p(run, "split"), "--train".into(), p(run, "corrupt/dataset.jsonl"), "--out".into(), p(run, "pretrain")]),
            ("train-off", vec!["train".into(), "--config".into(), c.into(), "--data".into(), p(run, "split"), "--train".into(), p(run, "corrupt/dataset.jsonl"), "--ignoring".into(), "off".into(), "--out".into(), p(run, "train-off")]),
            ("train-on", vec!["train".into(), "--config".into(), c.into(), "--data".into(), p(run, "split"), "--train".into(), p(run, "corrupt/dataset.jsonl"), "--ignoring".into(), "on".into(), "--pretrained".into(), p(run, "pretrain/checkpoint.json"), "--out".into(), p(run, "train-on")]),
            ("evaluate", vec!["evaluate".into(), "--config".into(), c.into(), "--checkpoint".into(), p(run, "train-on/checkpoint.json"), "--split".into(), p(run, "split/test.jsonl"), "--out".into(), p(run, "evaluate")]),
            ("hypergrad-check", vec!["hypergrad-check".into(), "--config".into(), c.into(), "--out".into(), p(run, "hypergrad-check")]),
            ("experiment", vec!["experiment".into(), "--config".into(), c.into(), "--seeds".into(), "2".into(), "--jobs".into(), (run + 1).to_string(), "--out".into(), p(run, "experiment")]),
        ];
        for (_, args) in &steps {
            let args: Vec<&str> = args.iter().map(String::as_str).collect();
            run_cli(&args)?;
        }
        if run == 1 {
            for (name, _) in &steps {
                let dir = |r: usize| root.join(format!("r{r}")).join(name);
                let a = manifest(&dir(0))?;
                let b = manifest(&dir(1))?;
                if a != b {
                    return Err(format!("{name}: manifests differ"));
                }
                compared.push(*name);
            }
        }
    }
    Ok(format!("{} commands re-run with identical content hashes ({})", compared.len(), compared.join(", ")))
}

fn main() {
    let mut failures = 0;
    let mut report = |n: usize, name: &str, outcome: Outcome| {
        match outcome {
            Ok(d) => println!("PASS criterion {n:>2} ({name}): {d}"),
            Err(d) => {
                failures += 1;
                println!("FAIL criterion {n:>2} ({name}): {d}");
            }
        }
    };
    report(1, "gradient correctness", gradient_correctness());
    report(2, "hypergradient oracle agreement", hypergradient_oracle());
    report(3, "analytic identity", analytic_identity());
    let full = run_seeds(1.0, &[BASELINE, IGNORING]);
    report(4, "corruption detection", corruption_detection(&full));
    report(5, "ignoring improves generalization", generalization(&full));
    let low = run_seeds(0.1, &Condition::GRID);
    report(6, "pretraining helps with few labels", pretraining_helps(&low));
    report(7, "ablation ordering", ablation_order(&low));
    report(8, "metrics", metrics_suite());
    report(9, "split protocol", split_protocol());
    report(10, "CLI determinism", determinism());
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 10 acceptance criteria passed");
}
