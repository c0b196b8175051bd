//! `har eval-online`: stream a labeled recording through the pipeline and
//! classifier at stride 1, label each window's newest frame, and score the
//! resulting label stream frame-by-frame and event-based.

use crate::errors::CliError;
use crate::runcfg::{prepare_run_dir, write_summary};
use clap::Parser;
use har_core::dataset::online_windows;
use har_core::eval::{frame_accuracy, report_csv, report_text, score_segments, segments_jsonl, summarize};
use har_core::ingest::Recording;
use har_core::labels::LabelStream;
use har_core::model::checkpoint::load_checkpoint;
use har_core::model::network::predict_windows;
use har_core::model::Ablation;
use har_core::ActionClass;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Parser, Serialize)]
pub struct Args {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub recording: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Score the warm-up frames (before the first full window) too.
    #[arg(long, default_value_t = false)]
    pub include_warmup: bool,
}

pub fn run(args: Args) -> Result<(), CliError> {
    prepare_run_dir(&args.out, "eval-online", &args)?;
    let (params, meta) = load_checkpoint(&args.checkpoint)?;
    let recording = Recording::load(&args.recording)?;
    let labels = recording
        .meta
        .labels
        .clone()
        .ok_or_else(|| CliError::data("recording has no ground-truth labels"))?;

    let stream = online_windows(&recording, &meta.pipeline, meta.pipeline.split_stats)?;
    if stream.windows.is_empty() {
        return Err(CliError::data(format!(
            "recording too short: {} synced frames, window needs {}",
            stream.timestamps.len(),
            meta.pipeline.window_len
        )));
    }

    // One prediction per window, in input order.
    let predicted = predict_windows(&params, &stream.windows)?;

    // The prediction labels the window's newest frame; warm-up frames are
    // idle by definition.
    let warmup = meta.pipeline.window_len - 1;
    let end_us = recording.meta.end_us;
    let pred_entries: Vec<(u64, ActionClass)> = stream
        .timestamps
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let label = if i < warmup {
                ActionClass::Idle
            } else {
                predicted[i - warmup]
            };
            (t, label)
        })
        .collect();
    let gt_entries: Vec<(u64, ActionClass)> = stream
        .timestamps
        .iter()
        .map(|&t| (t, labels.label_at(t).unwrap_or(ActionClass::Idle)))
        .collect();

    let skip = if args.include_warmup { 0 } else { warmup };
    let pred = LabelStream::new(pred_entries[skip..].to_vec(), end_us)
        .map_err(|e| CliError::data(e.to_string()))?;
    let gt = LabelStream::new(gt_entries[skip..].to_vec(), end_us)
        .map_err(|e| CliError::data(e.to_string()))?;

    let acc = frame_accuracy(&gt, &pred)?;
    let scores = score_segments(&gt, &pred)?;
    let report = summarize(&scores, &gt, &pred)?;

    let model_name = match meta.fusion.ablation {
        Ablation::None => "multimodal",
        Ablation::ImuOnly => "imu-only",
        Ablation::VideoOnly => "video-only",
    };
    std::fs::write(args.out.join("event_report.csv"), report_csv(&report, model_name))?;
    let text = report_text(&report, model_name);
    std::fs::write(args.out.join("event_report.txt"), &text)?;
    std::fs::write(args.out.join("timeline.jsonl"), segments_jsonl(&scores))?;

    let mut acc_csv = String::from("scope,accuracy,frames\n");
    acc_csv.push_str(&format!("global,{:.6},{}\n", acc.global, acc.total_frames));
    for (class, value) in &acc.per_class {
        match value {
            Some(v) => acc_csv.push_str(&format!("{class},{v:.6},\n")),
            None => acc_csv.push_str(&format!("{class},,\n")),
        }
    }
    std::fs::write(args.out.join("frame_accuracy.csv"), acc_csv)?;

    write_summary(
        &args.out,
        &serde_json::json!({
            "frames_scored": acc.total_frames,
            "frame_accuracy": acc.global,
            "windows": stream.windows.len(),
            "dropped_no_bottom": stream.counters.dropped_no_bottom,
            "stale_module_flags": stream.counters.stale_module_flags,
            "positive": report.positive,
            "negative": report.negative,
        }),
    )?;
    print!("{text}");
    Ok(())
}
