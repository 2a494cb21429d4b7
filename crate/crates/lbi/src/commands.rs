//! One function per subcommand. Each writes into an [`OutputDir`] and
//! returns the produced files with their hashes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lbi_core::data::{corrupt as corrupt_examples, generate_synthetic, stratified_split, Codebook, EncodedExample, Split, VqaExample, DEFAULT_VOCAB_CAP};
use lbi_core::metrics::{evaluate as evaluate_model, EvalReport};
use lbi_core::models::{transfer_encoders, TwoTowerModel};
use lbi_core::rng;
use lbi_core::ssl::{finetune, pretrain as pretrain_model, FinetuneData, PretrainData};
use serde::Serialize;

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::experiment::{labeled_subset, mean_over_seeds, model_dims, run_grid, Condition, Detection};
use crate::io;
use crate::output::OutputDir;

pub type Produced = BTreeMap<String, String>;

pub fn generate(cfg: &RunConfig, out: &Path) -> Result<Produced> {
    let examples = generate_synthetic(&cfg.synthetic)?;
    let mut dir = OutputDir::new(out);
    dir.write("dataset.jsonl", &io::dataset_bytes(&examples))?;
    dir.finish("generate", cfg)
}

pub fn corrupt(cfg: &RunConfig, input: &Path, out: &Path) -> Result<Produced> {
    let examples = io::load_dataset(input)?;
    let (corrupted, mask) = corrupt_examples(&examples, &cfg.corruption)?;
    let mut dir = OutputDir::new(out);
    dir.write("dataset.jsonl", &io::dataset_bytes(&corrupted))?;
    dir.write_json("mask.json", &mask)?;
    dir.finish("corrupt", cfg)
}

#[derive(Serialize)]
struct SplitManifest {
    train: Vec<u64>,
    val: Vec<u64>,
    test: Vec<u64>,
    seed: u64,
    ratios: [f64; 3],
}

/// Writes the three splits, the split manifest and the codebook built from
/// the whole input.
pub fn split(cfg: &RunConfig, input: &Path, out: &Path) -> Result<Produced> {
    let examples = io::load_dataset(input)?;
    let codebook = Codebook::build(&examples, DEFAULT_VOCAB_CAP);
    let s = stratified_split(&examples, &cfg.split)?;
    let mut dir = OutputDir::new(out);
    for (name, part) in [("train", &s.train), ("val", &s.val), ("test", &s.test)] {
        dir.write(&format!("{name}.jsonl"), &io::dataset_bytes(part))?;
    }
    let manifest = SplitManifest {
        train: Split::ids(&s.train),
        val: Split::ids(&s.val),
        test: Split::ids(&s.test),
        seed: cfg.split.seed,
        ratios: cfg.split.ratios,
    };
    dir.write_json("split.json", &manifest)?;
    dir.write_json("codebook.json", &codebook)?;
    dir.finish("split", cfg)
}

/// A directory written by [`split`], optionally with a replacement training set.
pub struct SplitDir {
    pub codebook: Codebook,
    pub train: Vec<VqaExample>,
    pub val: Vec<VqaExample>,
    pub test: Vec<VqaExample>,
}

impl SplitDir {
    pub fn load(dir: &Path, train_override: Option<&Path>) -> Result<Self> {
        let train_path = train_override.map_or_else(|| dir.join("train.jsonl"), Path::to_path_buf);
        Ok(SplitDir {
            codebook: io::read_json(&dir.join("codebook.json"))?,
            train: io::load_dataset(&train_path)?,
            val: io::load_dataset(&dir.join("val.jsonl"))?,
            test: io::load_dataset(&dir.join("test.jsonl"))?,
        })
    }
}

fn encode(codebook: &Codebook, examples: &[VqaExample]) -> Result<Vec<EncodedExample>> {
    Ok(codebook.encode_all(examples)?)
}

/// Pretrains on the training split: every example contributes its image and
/// question, the labeled fraction also its answer.
pub fn pretrain(cfg: &RunConfig, data: &Path, train_override: Option<&Path>, out: &Path) -> Result<Produced> {
    let d = SplitDir::load(data, train_override)?;
    let (labeled, unlabeled) = labeled_subset(&d.train, cfg);
    let labeled = encode(&d.codebook, &labeled)?;
    let unlabeled = encode(&d.codebook, &unlabeled)?;
    let l: Vec<&EncodedExample> = labeled.iter().collect();
    let u: Vec<&EncodedExample> = unlabeled.iter().collect();
    let source = TwoTowerModel::new(model_dims(cfg, &d.codebook), rng::derive(cfg.model_seed(), 1))?;
    let pre = pretrain_model(&source, PretrainData { unlabeled: &u, labeled: &l }, &cfg.pretrain)?;

    let mut dir = OutputDir::new(out);
    dir.write("checkpoint.json", &Checkpoint::new(pre.model, d.codebook, cfg.hash()).to_bytes())?;
    dir.write("curves.csv", &io::curves_csv(&pre.curves))?;
    let series = |f: fn(&lbi_core::ssl::CurvePoint) -> Option<f64>| pre.curves.iter().map(|c| f(c).unwrap_or(f64::NAN)).collect();
    let plot = io::line_plot_svg(
        "pretraining losses",
        "epoch",
        &[
            ("iq", series(|c| c.loss_iq)),
            ("ia", series(|c| c.loss_ia)),
            ("qa", series(|c| c.loss_qa)),
            ("joint", series(|c| Some(c.loss_joint))),
        ],
    );
    dir.write("curves.svg", &plot)?;
    dir.finish("pretrain", cfg)
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    config_hash: String,
    seed: u64,
    ignoring: bool,
    pretrained: bool,
    n_labeled: usize,
    report: &'a EvalReport,
    retrained_report: Option<&'a EvalReport>,
    removed: Option<usize>,
    detection: Option<Detection>,
    final_train_loss: Option<f64>,
    final_val_loss: Option<f64>,
}

pub struct TrainArgs<'a> {
    pub data: &'a Path,
    pub train: Option<&'a Path>,
    pub pretrained: Option<&'a Path>,
}

pub fn train(cfg: &RunConfig, args: TrainArgs<'_>, out: &Path) -> Result<Produced> {
    let d = SplitDir::load(args.data, args.train)?;
    let (labeled, _) = labeled_subset(&d.train, cfg);
    let labeled = encode(&d.codebook, &labeled)?;
    let val = encode(&d.codebook, &d.val)?;
    let test = encode(&d.codebook, &d.test)?;
    let fresh = TwoTowerModel::new(model_dims(cfg, &d.codebook), cfg.model_seed())?;
    let init = match args.pretrained {
        Some(path) => {
            let ck = Checkpoint::load(path)?;
            if ck.codebook != d.codebook {
                return Err(lbi_core::Error::Config(format!(
                    "{} was pretrained with a different vocabulary or answer set",
                    path.display()
                ))
                .into());
            }
            transfer_encoders(&ck.model, &fresh)?
        }
        None => fresh,
    };
    let l: Vec<&EncodedExample> = labeled.iter().collect();
    let v: Vec<&EncodedExample> = val.iter().collect();
    let t: Vec<&EncodedExample> = test.iter().collect();
    let outcome = finetune(&init, FinetuneData { train: &l, val: &v, test: &t }, &cfg.lbi, &d.codebook)?;

    let ids: Vec<u64> = labeled.iter().map(|e| e.id).collect();
    let flags: Option<Vec<bool>> =
        labeled.iter().any(|e| e.corrupted.is_some()).then(|| labeled.iter().map(|e| e.corrupted == Some(true)).collect());
    let last = outcome.trace.last();
    let detection = match (cfg.lbi.ignoring, last, &flags) {
        (true, Some(s), Some(f)) => Detection::measure(&s.a, f)?,
        _ => None,
    };

    let mut dir = OutputDir::new(out);
    dir.write("checkpoint.json", &Checkpoint::new(outcome.model.clone(), d.codebook.clone(), cfg.hash()).to_bytes())?;
    dir.write("trace.csv", &io::trace_csv(&outcome.trace, &ids, flags.as_deref()))?;
    dir.write_json("report.json", &outcome.report)?;
    dir.write("report.tsv", format!("{}\n{}\n", EvalReport::TSV_HEADER, outcome.report.tsv_line()).as_bytes())?;
    dir.write(
        "loss.svg",
        &io::line_plot_svg(
            "training losses",
            "epoch",
            &[
                ("train (a-weighted mean)", outcome.trace.iter().map(|s| s.train_loss).collect()),
                ("val", outcome.trace.iter().map(|s| s.val_loss).collect()),
            ],
        ),
    )?;
    if cfg.lbi.ignoring {
        if let Some(s) = last {
            dir.write("a_hist.svg", &io::histogram_svg("final ignoring variables", &s.a, flags.as_deref(), 20))?;
        }
    }
    if let Some(r) = &outcome.retrained {
        dir.write_json("retrained_report.json", &r.report)?;
        dir.write_json("removed.json", &r.removed_ids)?;
    }
    let summary = TrainSummary {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        ignoring: cfg.lbi.ignoring,
        pretrained: args.pretrained.is_some(),
        n_labeled: labeled.len(),
        report: &outcome.report,
        retrained_report: outcome.retrained.as_ref().map(|r| &r.report),
        removed: outcome.retrained.as_ref().map(|r| r.removed_ids.len()),
        detection,
        final_train_loss: last.map(|s| s.train_loss),
        final_val_loss: last.map(|s| s.val_loss),
    };
    dir.write_json("summary.json", &summary)?;
    dir.finish("train", cfg)
}

/// Scores a checkpoint on a dataset file, whose answers are taken as gold.
pub fn evaluate(cfg: &RunConfig, checkpoint: &Path, split: &Path, out: &Path) -> Result<(Produced, EvalReport)> {
    let ck = Checkpoint::load(checkpoint)?;
    let examples = encode(&ck.codebook, &io::load_dataset(split)?)?;
    let refs: Vec<&EncodedExample> = examples.iter().collect();
    let report = evaluate_model(&ck.model, &refs, &ck.codebook)?;
    let mut dir = OutputDir::new(out);
    dir.write_json("report.json", &report)?;
    dir.write("report.tsv", format!("{}\n{}\n", EvalReport::TSV_HEADER, report.tsv_line()).as_bytes())?;
    Ok((dir.finish("evaluate", cfg)?, report))
}

/// Writes the report, then fails with [`CliError::Tolerance`] if the largest
/// relative deviation reaches the tolerance.
pub fn hypergrad_check(cfg: &RunConfig, out: &Path) -> Result<Produced> {
    let seed = rng::derive(cfg.seed, crate::config::streams::HYPERGRAD_CHECK);
    let report = crate::check::run_check(&cfg.hypergrad_check, seed)?;
    let mut dir = OutputDir::new(out);
    dir.write_json("hypergrad_report.json", &report)?;
    let produced = dir.finish("hypergrad-check", cfg)?;
    if !report.passed {
        return Err(CliError::Tolerance { max_rel_dev: report.overall.max_rel_dev, tolerance: cfg.hypergrad_check.tolerance });
    }
    Ok(produced)
}

#[derive(Serialize)]
struct GridRow {
    condition: &'static str,
    seeds: usize,
    accuracy: f64,
    f1: f64,
    retrained_accuracy: Option<f64>,
    auc: Option<f64>,
    a_gap: Option<f64>,
}

/// The ±ignoring × ±pretraining grid over seeds `cfg.seed .. cfg.seed + seeds`.
pub fn experiment(cfg: &RunConfig, seeds: usize, jobs: usize, out: &Path) -> Result<Produced> {
    let seed_list: Vec<u64> = (0..seeds as u64).map(|k| cfg.seed + k).collect();
    let results = run_grid(cfg, &seed_list, &Condition::GRID, jobs)?;
    let mut rows = Vec::new();
    for c in Condition::GRID {
        let m = |f: &dyn Fn(&crate::experiment::ConditionResult) -> Option<f64>| {
            let v: Vec<f64> = results.iter().filter(|r| r.condition == c).filter_map(f).collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        };
        rows.push(GridRow {
            condition: c.label(),
            seeds,
            accuracy: mean_over_seeds(&results, c, |r| r.report.accuracy).unwrap_or(f64::NAN),
            f1: mean_over_seeds(&results, c, |r| r.report.f1).unwrap_or(f64::NAN),
            retrained_accuracy: m(&|r| r.retrained.as_ref().map(|x| x.accuracy)),
            auc: m(&|r| r.detection.map(|d| d.auc)),
            a_gap: m(&|r| r.detection.map(|d| d.gap())),
        });
    }
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
    let mut tsv = String::from("condition\tseeds\taccuracy\tf1\tretrained_accuracy\tauc\ta_gap\n");
    for r in &rows {
        tsv.push_str(&format!(
            "{}\t{}\t{:.4}\t{:.4}\t{}\t{}\t{}\n",
            r.condition,
            r.seeds,
            r.accuracy,
            r.f1,
            opt(r.retrained_accuracy),
            opt(r.auc),
            opt(r.a_gap)
        ));
    }
    let mut dir = OutputDir::new(out);
    dir.write_json("results.json", &results)?;
    dir.write_json("summary.json", &rows)?;
    dir.write("summary.tsv", tsv.as_bytes())?;
    dir.finish("experiment", cfg)
}

pub fn default_out(command: &str) -> PathBuf {
    PathBuf::from("runs").join(command)
}
