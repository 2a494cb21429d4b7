//! Random small instances for comparing the finite-difference hypergradient
//! with the exact unrolled oracle.

use lbi_core::lbi::{hypergrad_exact, hypergrad_fd_detailed, HypergradientReport};
use lbi_core::models::{ClassExample, LeastSquares, MlpClassifier, MlpDims, Objective, RegressionExample};
use lbi_core::rng::{self, Rng};
use lbi_core::Result;
use rand::Rng as _;
use serde::Serialize;

use crate::config::HypergradCheckConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceReport {
    pub model: String,
    pub n_train: usize,
    pub n_val: usize,
    pub report: HypergradientReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub config: HypergradCheckConfig,
    pub instances: Vec<InstanceReport>,
    pub overall: HypergradientReport,
    pub passed: bool,
}

fn compare<O: Objective>(
    obj: &O,
    w: &lbi_core::diffcore::ParameterSet,
    train: &[O::Example],
    val: &[O::Example],
    rng: &mut Rng,
    cfg: &HypergradCheckConfig,
) -> Result<HypergradientReport> {
    let train: Vec<&O::Example> = train.iter().collect();
    let val: Vec<&O::Example> = val.iter().collect();
    let a: Vec<f64> = (0..train.len()).map(|_| rng.random_range(0.1..0.9)).collect();
    let fd = hypergrad_fd_detailed(obj, w, &a, &train, &val, cfg.xi, cfg.eps, cfg.eps_scaling)?.grad;
    let exact = hypergrad_exact(obj, w, &a, &train, &val, cfg.xi)?;
    HypergradientReport::new(fd, exact, cfg.rel_floor)
}

/// Alternates least-squares and one-hidden-layer classifier instances with
/// random sizes up to the configured maxima.
pub fn run_check(cfg: &HypergradCheckConfig, seed: u64) -> Result<CheckReport> {
    let mut rng = rng::seeded(seed);
    let mut instances = Vec::with_capacity(cfg.instances);
    for k in 0..cfg.instances {
        let dim = rng.random_range(1..=cfg.max_dim);
        let n_train = rng.random_range(1..=cfg.max_train);
        let n_val = rng.random_range(1..=cfg.max_val);
        let (model, report) = if k % 2 == 0 {
            let obj = LeastSquares { dim };
            let w = obj.params(&(0..dim).map(|_| rng::normal(&mut rng)).collect::<Vec<_>>())?;
            let draw = |rng: &mut Rng| RegressionExample {
                x: (0..dim).map(|_| rng::normal(rng)).collect(),
                y: rng::normal(rng),
            };
            let train: Vec<_> = (0..n_train).map(|_| draw(&mut rng)).collect();
            let val: Vec<_> = (0..n_val).map(|_| draw(&mut rng)).collect();
            (format!("least_squares(dim={dim})"), compare(&obj, &w, &train, &val, &mut rng, cfg)?)
        } else {
            let dims = MlpDims { input: dim, hidden: 3, classes: 3 };
            let w = MlpClassifier::new(dims, rng.random())?.params;
            let draw = |rng: &mut Rng| ClassExample {
                features: (0..dim).map(|_| rng::normal(rng)).collect(),
                label: rng.random_range(0..3),
            };
            let train: Vec<_> = (0..n_train).map(|_| draw(&mut rng)).collect();
            let val: Vec<_> = (0..n_val).map(|_| draw(&mut rng)).collect();
            (format!("mlp(input={dim},hidden=3,classes=3)"), compare(&dims, &w, &train, &val, &mut rng, cfg)?)
        };
        instances.push(InstanceReport { model, n_train, n_val, report });
    }
    let overall = HypergradientReport::concat(&instances.iter().map(|i| i.report.clone()).collect::<Vec<_>>(), cfg.rel_floor)?;
    let passed = overall.max_rel_dev < cfg.tolerance;
    Ok(CheckReport { config: *cfg, instances, overall, passed })
}
