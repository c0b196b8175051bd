//! `har hrc-sim`: closed-loop trials with the oracle or a trained model;
//! writes trial logs, latency statistics and per-class boxplot data.

use crate::errors::CliError;
use crate::runcfg::{prepare_run_dir, write_summary};
use clap::Parser;
use har_core::hrc::{
    closed_loop, latency_stats, HrcConfig, ModelRecognizer, OracleRecognizer, ScheduledAction,
    TrajectoryShape, TrialLog,
};
use har_core::model::checkpoint::load_checkpoint;
use har_core::pipeline::Preprocessor;
use har_core::sample::SensorGeometry;
use har_core::ActionClass;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Parser, Serialize)]
pub struct Args {
    /// Trained checkpoint; mutually exclusive with --oracle.
    #[arg(long, conflicts_with = "oracle")]
    pub checkpoint: Option<PathBuf>,
    /// Ground-truth recognizer with the moving-window delay.
    #[arg(long, default_value_t = false)]
    pub oracle: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Simulated subjects (one trial each).
    #[arg(long, default_value_t = 10)]
    pub subjects: usize,
    /// Commanded actions per trial.
    #[arg(long, default_value_t = 5)]
    pub actions: usize,
    /// Fixed commanded classes (comma-separated) instead of a random draw.
    #[arg(long, value_delimiter = ',')]
    pub classes: Vec<ActionClass>,
    #[arg(long, default_value_t = 5)]
    pub debounce: usize,
    #[arg(long, default_value_t = 0.5)]
    pub reaction_min: f64,
    #[arg(long, default_value_t = 1.5)]
    pub reaction_max: f64,
    #[arg(long, default_value_t = 0.2)]
    pub speed: f64,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 60.0)]
    pub timeout: f64,
    /// Oracle window length (ignored with a checkpoint).
    #[arg(long, default_value_t = 90)]
    pub window: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short, default_value_t = false)]
    pub verbose: bool,
}

pub fn run(args: Args) -> Result<(), CliError> {
    prepare_run_dir(&args.out, "hrc-sim", &args)?;
    if !args.oracle && args.checkpoint.is_none() {
        return Err(CliError::config("pass --oracle or --checkpoint"));
    }
    let checkpoint = match &args.checkpoint {
        Some(path) => Some(load_checkpoint(path)?),
        None => None,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let non_idle: Vec<ActionClass> = ActionClass::ALL
        .into_iter()
        .filter(|c| !c.is_idle())
        .collect();

    if args.classes.iter().any(|c| c.is_idle()) {
        return Err(CliError::config("idle cannot be commanded"));
    }

    let mut logs: Vec<TrialLog> = Vec::with_capacity(args.subjects);
    for subject in 0..args.subjects {
        // Runtime-randomized trajectory order and action-trajectory pairing.
        let mut shape_order = TrajectoryShape::ALL.to_vec();
        shape_order.shuffle(&mut rng);
        let trial_classes: Vec<ActionClass> = if args.classes.is_empty() {
            let mut actions = non_idle.clone();
            actions.shuffle(&mut rng);
            actions.into_iter().take(args.actions).collect()
        } else {
            args.classes.clone()
        };
        let schedule: Vec<ScheduledAction> = trial_classes
            .iter()
            .enumerate()
            .map(|(i, &class)| ScheduledAction {
                class,
                command_time_s: 1.0 + i as f64 * 2.0,
            })
            .collect();
        let config = HrcConfig {
            shape_order,
            scale_m: args.scale,
            speed_mps: args.speed,
            debounce_k: args.debounce,
            reaction_delay_s: (args.reaction_min, args.reaction_max),
            timeout_s: args.timeout,
            seed: args.seed.wrapping_add(subject as u64),
        };

        let log = match &checkpoint {
            None => {
                let mut oracle = OracleRecognizer::new(args.window);
                closed_loop(&mut oracle, &schedule, &config, None)?
            }
            Some((params, meta)) => {
                let preproc = Preprocessor::new(
                    &SensorGeometry::default(),
                    meta.pipeline.model_side,
                    meta.pipeline.split_stats,
                    meta.pipeline.imu_ranges,
                )
                .map_err(|e| CliError::config(e.to_string()))?;
                let mut recognizer = ModelRecognizer::new(params.clone());
                closed_loop(&mut recognizer, &schedule, &config, Some(preproc))?
            }
        };
        if args.verbose {
            let lats: Vec<String> = log
                .latencies_s()
                .iter()
                .map(|l| format!("{l:.2}"))
                .collect();
            eprintln!("subject {subject}: latencies [{}] s", lats.join(", "));
        }
        logs.push(log);
    }

    let mut jsonl = String::new();
    for log in &logs {
        jsonl.push_str(&serde_json::to_string(log)?);
        jsonl.push('\n');
    }
    std::fs::write(args.out.join("trials.jsonl"), jsonl)?;

    let stats = latency_stats(&logs).ok_or_else(|| CliError::data("no transitions recorded"))?;
    let mut stats_csv = String::from("count,mean_s,median_s,std_s,debounce_k\n");
    stats_csv.push_str(&format!(
        "{},{:.4},{:.4},{:.4},{}\n",
        stats.count, stats.mean_s, stats.median_s, stats.std_s, args.debounce
    ));
    std::fs::write(args.out.join("latency_stats.csv"), stats_csv)?;

    let mut box_csv = String::from("class,count,min_s,q1_s,median_s,q3_s,max_s,mean_s\n");
    for c in &stats.per_class {
        box_csv.push_str(&format!(
            "{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}\n",
            c.class, c.count, c.min_s, c.q1_s, c.median_s, c.q3_s, c.max_s, c.mean_s
        ));
    }
    std::fs::write(args.out.join("boxplot.csv"), box_csv)?;

    write_summary(
        &args.out,
        &serde_json::json!({
            "trials": logs.len(),
            "latencies": stats.count,
            "mean_s": stats.mean_s,
            "median_s": stats.median_s,
            "std_s": stats.std_s,
        }),
    )?;
    println!(
        "{} trials, {} actions: mean {:.2} s, median {:.2} s, sd {:.2} s (debounce {})",
        logs.len(),
        stats.count,
        stats.mean_s,
        stats.median_s,
        stats.std_s,
        args.debounce
    );
    Ok(())
}
