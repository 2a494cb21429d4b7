use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lbi::commands::{self, TrainArgs};
use lbi::config::{parse_config, RunConfig};
use lbi::{CliError, Result};

/// Learning by ignoring on a synthetic VQA task: data generation,
/// corruption, splitting, self-supervised pretraining, bilevel training and
/// evaluation. Every command writes config.json, seed and manifest.json
/// (SHA-256 of each output) into its output directory. Errors are printed to
/// stderr as one JSON object and exit nonzero.
#[derive(Parser)]
#[command(name = "lbi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; omitted keys take their defaults and unknown
    /// keys are rejected.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: runs/<command>]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; every stage seed is derived from it [config: seed, default 0]
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic dataset (dataset.jsonl).
    Generate {
        #[command(flatten)]
        common: Common,
        /// Number of examples [config: synthetic.n, default 2000]
        #[arg(long)]
        n: Option<usize>,
    },
    /// Flip answers and swap images (dataset.jsonl, mask.json).
    Corrupt {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        /// [config: corruption.label_flip_rate, default 0.3]
        #[arg(long)]
        flip_rate: Option<f64>,
        /// [config: corruption.mismatch_rate, default 0]
        #[arg(long)]
        mismatch_rate: Option<f64>,
    },
    /// Stratified 3:1:1 split (train/val/test.jsonl, split.json, codebook.json).
    Split {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
    },
    /// Joint self-supervised pretraining (checkpoint.json, curves.csv, curves.svg).
    Pretrain {
        #[command(flatten)]
        common: Common,
        /// Directory written by `split`
        #[arg(long)]
        data: PathBuf,
        /// Training set to use instead of <data>/train.jsonl
        #[arg(long)]
        train: Option<PathBuf>,
        /// [config: pretrain.epochs, default 30]
        #[arg(long)]
        epochs: Option<usize>,
        /// [config: label_fraction, default 1]
        #[arg(long)]
        label_fraction: Option<f64>,
    },
    /// Fine-tune with or without ignoring (checkpoint.json, trace.csv, report.json, summary.json).
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        train: Option<PathBuf>,
        /// [config: lbi.ignoring, default on]
        #[arg(long, value_enum)]
        ignoring: Option<OnOff>,
        /// Checkpoint from `pretrain` whose encoders initialize the model
        #[arg(long)]
        pretrained: Option<PathBuf>,
        /// [config: lbi.epochs, default 20]
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        label_fraction: Option<f64>,
    },
    /// Score a checkpoint on a dataset file (report.json, report.tsv).
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        split: PathBuf,
    },
    /// Compare finite-difference hypergradients with the exact oracle;
    /// exits 3 if the tolerance is exceeded.
    HypergradCheck {
        #[command(flatten)]
        common: Common,
    },
    /// Run the ignoring × pretraining grid over several seeds.
    Experiment {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        /// Seeds run in parallel
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            parse_config(&text, path)?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn out(common: &Common, name: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| commands::default_out(name))
}

fn run(cli: Cli) -> Result<(PathBuf, commands::Produced)> {
    match cli.command {
        Command::Generate { common, n } => {
            let mut cfg = load(&common)?;
            if let Some(n) = n {
                cfg.synthetic.n = n;
            }
            let dir = out(&common, "generate");
            Ok((dir.clone(), commands::generate(&cfg.resolved()?, &dir)?))
        }
        Command::Corrupt { common, input, flip_rate, mismatch_rate } => {
            let mut cfg = load(&common)?;
            if let Some(r) = flip_rate {
                cfg.corruption.label_flip_rate = r;
            }
            if let Some(r) = mismatch_rate {
                cfg.corruption.mismatch_rate = r;
            }
            let dir = out(&common, "corrupt");
            Ok((dir.clone(), commands::corrupt(&cfg.resolved()?, &input, &dir)?))
        }
        Command::Split { common, input } => {
            let cfg = load(&common)?.resolved()?;
            let dir = out(&common, "split");
            Ok((dir.clone(), commands::split(&cfg, &input, &dir)?))
        }
        Command::Pretrain { common, data, train, epochs, label_fraction } => {
            let mut cfg = load(&common)?;
            if let Some(e) = epochs {
                cfg.pretrain.epochs = e;
            }
            if let Some(f) = label_fraction {
                cfg.label_fraction = f;
            }
            let dir = out(&common, "pretrain");
            Ok((dir.clone(), commands::pretrain(&cfg.resolved()?, &data, train.as_deref(), &dir)?))
        }
        Command::Train { common, data, train, ignoring, pretrained, epochs, label_fraction } => {
            let mut cfg = load(&common)?;
            if let Some(i) = ignoring {
                cfg.lbi.ignoring = matches!(i, OnOff::On);
            }
            if let Some(e) = epochs {
                cfg.lbi.epochs = e;
            }
            if let Some(f) = label_fraction {
                cfg.label_fraction = f;
            }
            let dir = out(&common, "train");
            let args = TrainArgs { data: &data, train: train.as_deref(), pretrained: pretrained.as_deref() };
            Ok((dir.clone(), commands::train(&cfg.resolved()?, args, &dir)?))
        }
        Command::Evaluate { common, checkpoint, split } => {
            let cfg = load(&common)?.resolved()?;
            let dir = out(&common, "evaluate");
            let (produced, report) = commands::evaluate(&cfg, &checkpoint, &split, &dir)?;
            println!("{}", lbi_core::metrics::EvalReport::TSV_HEADER);
            println!("{}", report.tsv_line());
            Ok((dir, produced))
        }
        Command::HypergradCheck { common } => {
            let cfg = load(&common)?.resolved()?;
            let dir = out(&common, "hypergrad-check");
            Ok((dir.clone(), commands::hypergrad_check(&cfg, &dir)?))
        }
        Command::Experiment { common, seeds, jobs } => {
            let cfg = load(&common)?.resolved()?;
            let dir = out(&common, "experiment");
            Ok((dir.clone(), commands::experiment(&cfg, seeds, jobs, &dir)?))
        }
    }
}

fn report(dir: &Path, produced: &commands::Produced) {
    eprintln!("wrote {} files to {}", produced.len() + 1, dir.display());
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((dir, produced)) => {
            report(&dir, &produced);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
