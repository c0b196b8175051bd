//! `har train`: fit the late-fusion classifier on a manifest's train split,
//! validating per epoch, writing the best checkpoint and a metrics CSV.

use crate::errors::CliError;
use crate::manifest::SplitManifest;
use crate::runcfg::{prepare_run_dir, write_summary};
use clap::{Parser, ValueEnum};
use har_core::model::checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
use har_core::model::train::{train, Optimizer, TrainOptions};
use har_core::model::{Ablation, FusionConfig};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblateArg {
    None,
    ImuOnly,
    VideoOnly,
}

impl From<AblateArg> for Ablation {
    fn from(a: AblateArg) -> Ablation {
        match a {
            AblateArg::None => Ablation::None,
            AblateArg::ImuOnly => Ablation::ImuOnly,
            AblateArg::VideoOnly => Ablation::VideoOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Debug, Parser, Serialize)]
pub struct Args {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 16)]
    pub batch: usize,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Sgd)]
    pub optimizer: OptimizerArg,
    /// Learning rate (defaults: 1e-2 for sgd, 1e-3 for adam).
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    /// Zero branches to train a unimodal baseline.
    #[arg(long, value_enum, default_value_t = AblateArg::None)]
    pub ablate: AblateArg,
    /// Continue training from an existing checkpoint.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    // Architecture (defaults are the toy scale).
    #[arg(long, default_value_t = 10)]
    pub tubelet_t: usize,
    #[arg(long, default_value_t = 8)]
    pub patch: usize,
    #[arg(long, default_value_t = 32)]
    pub embed_dim: usize,
    #[arg(long, default_value_t = 4)]
    pub heads: usize,
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    #[arg(long, default_value_t = 2)]
    pub ffn_mult: usize,
    #[arg(long, default_value_t = 10)]
    pub imu_group: usize,
    #[arg(long, default_value_t = 32)]
    pub feature_dim: usize,
    #[arg(long, short, default_value_t = false)]
    pub verbose: bool,
}

pub fn run(args: Args) -> Result<(), CliError> {
    prepare_run_dir(&args.out, "train", &args)?;
    let (manifest, dir) = SplitManifest::load(&args.manifest)?;

    let config = FusionConfig {
        window_len: manifest.pipeline.window_len,
        side: manifest.pipeline.model_side as usize,
        tubelet_t: args.tubelet_t,
        patch: args.patch,
        embed_dim: args.embed_dim,
        heads: args.heads,
        depth: args.depth,
        ffn_mult: args.ffn_mult,
        imu_group: args.imu_group,
        feature_dim: args.feature_dim,
        classes: har_core::ActionClass::COUNT,
        seed: args.seed,
        ablation: args.ablate.into(),
    };
    config.validate()?;

    let optimizer = match args.optimizer {
        OptimizerArg::Sgd => Optimizer::Sgd {
            lr: args.lr.unwrap_or(1e-2),
            momentum: args.momentum,
        },
        OptimizerArg::Adam => Optimizer::adam(args.lr.unwrap_or(1e-3)),
    };
    let opts = TrainOptions {
        epochs: args.epochs,
        batch_size: args.batch,
        optimizer,
        shuffle_seed: args.seed,
    };

    if args.verbose {
        eprintln!("loading splits from {}", dir.display());
    }
    let train_set = manifest.load_split(&dir, &manifest.train)?;
    let val_set = manifest.load_split(&dir, &manifest.val)?;
    if args.verbose {
        eprintln!("train {} windows, val {} windows", train_set.len(), val_set.len());
    }

    let resume = match &args.resume {
        Some(path) => Some(load_checkpoint(path)?.0),
        None => None,
    };
    let trained = train(&config, &train_set, &val_set, &opts, resume)?;

    let mut csv = String::from("epoch,train_loss,train_acc,val_acc\n");
    for m in &trained.metrics {
        csv.push_str(&format!(
            "{},{:.6},{:.6},{:.6}\n",
            m.epoch, m.train_loss, m.train_acc, m.val_acc
        ));
        if args.verbose {
            eprintln!(
                "epoch {:>3}: loss {:.4} train {:.3} val {:.3}",
                m.epoch, m.train_loss, m.train_acc, m.val_acc
            );
        }
    }
    std::fs::write(args.out.join("metrics.csv"), csv)?;

    // The checkpoint embeds the pipeline settings with the statistics of the
    // split it was trained on, for live reuse.
    let meta = CheckpointMeta {
        fusion: config,
        pipeline: har_core::pipeline::PipelineConfig {
            split_stats: train_set.stats,
            ..manifest.pipeline.clone()
        },
    };
    save_checkpoint(&args.out.join("checkpoint.bin"), &trained.params, &meta)?;

    write_summary(
        &args.out,
        &serde_json::json!({
            "best_epoch": trained.best_epoch,
            "best_val_acc": trained.best_val_acc,
            "train_windows": train_set.len(),
            "val_windows": val_set.len(),
        }),
    )?;
    println!(
        "checkpoint at {} (best epoch {}, val accuracy {:.4})",
        args.out.join("checkpoint.bin").display(),
        trained.best_epoch,
        trained.best_val_acc
    );
    Ok(())
}
