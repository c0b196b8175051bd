//! `har eval-offline`: window accuracy, macro-F1 and confusion matrix on the
//! manifest's test split.

use crate::errors::CliError;
use crate::manifest::SplitManifest;
use crate::runcfg::{prepare_run_dir, write_summary};
use clap::Parser;
use har_core::eval::ConfusionMatrix;
use har_core::model::checkpoint::load_checkpoint;
use har_core::model::train::predict_dataset;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Parser, Serialize)]
pub struct Args {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: Args) -> Result<(), CliError> {
    prepare_run_dir(&args.out, "eval-offline", &args)?;
    let (manifest, dir) = SplitManifest::load(&args.manifest)?;
    let (params, meta) = load_checkpoint(&args.checkpoint)?;
    if meta.pipeline.model_side != manifest.pipeline.model_side
        || meta.pipeline.window_len != manifest.pipeline.window_len
    {
        return Err(CliError::config(format!(
            "checkpoint expects side {} / window {}, manifest has side {} / window {}",
            meta.pipeline.model_side,
            meta.pipeline.window_len,
            manifest.pipeline.model_side,
            manifest.pipeline.window_len
        )));
    }

    let test_set = manifest.load_split(&dir, &manifest.test)?;
    if test_set.is_empty() {
        return Err(CliError::data("test split is empty"));
    }
    let predictions = predict_dataset(&params, &test_set)?;
    let confusion = ConfusionMatrix::from_pairs(
        test_set
            .samples
            .iter()
            .map(|s| s.label)
            .zip(predictions.iter().copied()),
    );

    std::fs::write(args.out.join("confusion.csv"), confusion.to_csv())?;
    let accuracy = confusion.accuracy();
    let macro_f1 = confusion.macro_f1();
    write_summary(
        &args.out,
        &serde_json::json!({
            "windows": test_set.len(),
            "accuracy": accuracy,
            "macro_f1": macro_f1,
        }),
    )?;
    println!(
        "test windows {}: accuracy {:.4}, macro-F1 {:.4}",
        test_set.len(),
        accuracy,
        macro_f1
    );
    Ok(())
}
