//! The corrupted synthetic benchmark: data preparation shared with the
//! subcommands, and the ±ignoring × ±pretraining grid.

use lbi_core::data::{corrupt, generate_synthetic, stratified_split, Codebook, EncodedExample, VqaExample, DEFAULT_VOCAB_CAP};
use lbi_core::metrics::{roc_auc, EvalReport};
use lbi_core::models::TwoTowerDims;
use lbi_core::rng;
use lbi_core::ssl::{pretrain_then_finetune, FinetuneData, FinetuneOutcome, JointWeights, PretrainData};
use lbi_core::Result;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::config::{streams, RunConfig};

/// Splits `train` into the labeled subset and the unlabeled remainder by a
/// seeded shuffle. Both parts keep the shuffled order.
pub fn labeled_subset(train: &[VqaExample], cfg: &RunConfig) -> (Vec<VqaExample>, Vec<VqaExample>) {
    let mut all = train.to_vec();
    all.shuffle(&mut rng::seeded(rng::derive(cfg.seed, streams::LABELED_SUBSET)));
    let n = ((cfg.label_fraction * all.len() as f64).round() as usize).clamp(1.min(all.len()), all.len());
    let rest = all.split_off(n);
    (all, rest)
}

pub fn model_dims(cfg: &RunConfig, codebook: &Codebook) -> TwoTowerDims {
    TwoTowerDims {
        image_dim: cfg.synthetic.image_dim,
        vocab: codebook.vocab.len(),
        embed: cfg.model.embed,
        hidden: cfg.model.hidden,
        classes: codebook.answers.len(),
    }
}

/// One seed's data, encoded.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub codebook: Codebook,
    pub dims: TwoTowerDims,
    pub labeled: Vec<EncodedExample>,
    pub unlabeled: Vec<EncodedExample>,
    pub val: Vec<EncodedExample>,
    pub test: Vec<EncodedExample>,
}

/// Generate, split, corrupt the training split only, then hold back all but
/// `label_fraction` of its answers. `cfg` must be resolved.
pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let raw = generate_synthetic(&cfg.synthetic)?;
    let codebook = Codebook::build(&raw, DEFAULT_VOCAB_CAP);
    let split = stratified_split(&raw, &cfg.split)?;
    let (train, _) = corrupt(&split.train, &cfg.corruption)?;
    let (labeled, unlabeled) = labeled_subset(&train, cfg);
    Ok(Prepared {
        dims: model_dims(cfg, &codebook),
        labeled: codebook.encode_all(&labeled)?,
        unlabeled: codebook.encode_all(&unlabeled)?,
        val: codebook.encode_all(&split.val)?,
        test: codebook.encode_all(&split.test)?,
        codebook,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub ignoring: bool,
    pub pretraining: bool,
}

impl Condition {
    pub const GRID: [Condition; 4] = [
        Condition { ignoring: false, pretraining: false },
        Condition { ignoring: true, pretraining: false },
        Condition { ignoring: false, pretraining: true },
        Condition { ignoring: true, pretraining: true },
    ];

    pub fn label(&self) -> &'static str {
        match (self.ignoring, self.pretraining) {
            (false, false) => "baseline",
            (true, false) => "ignoring",
            (false, true) => "pretraining",
            (true, true) => "pretraining+ignoring",
        }
    }
}

/// How well low final `a` flags the corrupted training examples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub auc: f64,
    pub mean_a_corrupted: f64,
    pub mean_a_clean: f64,
}

impl Detection {
    /// `None` unless both clean and corrupted examples are present.
    pub fn measure(a: &[f64], corrupted: &[bool]) -> Result<Option<Self>> {
        if !corrupted.iter().any(|&c| c) || corrupted.iter().all(|&c| c) {
            return Ok(None);
        }
        let scores: Vec<f64> = a.iter().map(|a| 1.0 - a).collect();
        let mean = |want: bool| {
            let v: Vec<f64> = a.iter().zip(corrupted).filter(|(_, &c)| c == want).map(|(a, _)| *a).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        Ok(Some(Detection { auc: roc_auc(&scores, corrupted)?, mean_a_corrupted: mean(true), mean_a_clean: mean(false) }))
    }

    pub fn gap(&self) -> f64 {
        self.mean_a_clean - self.mean_a_corrupted
    }
}

/// Scores of one condition on one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub seed: u64,
    pub condition: Condition,
    /// Test report of the soft-weighted model.
    pub report: EvalReport,
    /// Test report after hard removal and retraining, when that ran.
    pub retrained: Option<EvalReport>,
    pub detection: Option<Detection>,
}

/// The condition's switches applied on top of `cfg`.
pub fn condition_config(cfg: &RunConfig, condition: Condition) -> RunConfig {
    let mut c = cfg.clone();
    c.lbi.ignoring = condition.ignoring;
    if !condition.pretraining {
        c.pretrain.weights = JointWeights { iq: 0.0, ia: 0.0, qa: 0.0 };
    }
    c
}

pub fn run_condition(cfg: &RunConfig, data: &Prepared, condition: Condition) -> Result<(ConditionResult, FinetuneOutcome)> {
    let c = condition_config(cfg, condition);
    let labeled: Vec<&EncodedExample> = data.labeled.iter().collect();
    let unlabeled: Vec<&EncodedExample> = data.unlabeled.iter().collect();
    let val: Vec<&EncodedExample> = data.val.iter().collect();
    let test: Vec<&EncodedExample> = data.test.iter().collect();
    let out = pretrain_then_finetune(
        data.dims,
        cfg.model_seed(),
        PretrainData { unlabeled: &unlabeled, labeled: &labeled },
        FinetuneData { train: &labeled, val: &val, test: &test },
        &c.pretrain,
        &c.lbi,
        &data.codebook,
    )?;
    let detection = match (condition.ignoring, out.trace.last()) {
        (true, Some(last)) => {
            let flags: Vec<bool> = data.labeled.iter().map(|e| e.corrupted == Some(true)).collect();
            Detection::measure(&last.a, &flags)?
        }
        _ => None,
    };
    let result = ConditionResult {
        seed: cfg.seed,
        condition,
        report: out.report.clone(),
        retrained: out.retrained.as_ref().map(|r| r.report.clone()),
        detection,
    };
    Ok((result, out))
}

/// Every condition for every seed, seeds spread over up to `jobs` threads.
/// Results are ordered by seed, then condition, whatever `jobs` is.
pub fn run_grid(base: &RunConfig, seeds: &[u64], conditions: &[Condition], jobs: usize) -> crate::error::Result<Vec<ConditionResult>> {
    let jobs = jobs.clamp(1, seeds.len().max(1));
    let per_thread = seeds.len().div_ceil(jobs).max(1);
    let chunks: Vec<&[u64]> = seeds.chunks(per_thread).collect();
    let results: Vec<crate::error::Result<Vec<ConditionResult>>> = std::thread::scope(|s| {
        let handles: Vec<_> = chunks
            .iter()
            .map(|chunk| {
                s.spawn(move || {
                    let mut out = Vec::new();
                    for &seed in *chunk {
                        let cfg = base.with_seed(seed)?;
                        let data = prepare(&cfg)?;
                        for &c in conditions {
                            out.push(run_condition(&cfg, &data, c)?.0);
                        }
                    }
                    Ok(out)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("experiment thread panicked")).collect()
    });
    let mut all = Vec::new();
    for r in results {
        all.extend(r?);
    }
    Ok(all)
}

/// Mean of `f` over the results of one condition.
pub fn mean_over_seeds(results: &[ConditionResult], condition: Condition, f: impl Fn(&ConditionResult) -> f64) -> Option<f64> {
    let v: Vec<f64> = results.iter().filter(|r| r.condition == condition).map(f).collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}
