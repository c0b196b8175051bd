//! `har synth-dataset`: per-class segmented recordings plus continuous
//! sequences, saved as containers with a 60/20/20 split manifest.

use crate::errors::CliError;
use crate::manifest::SplitManifest;
use crate::runcfg::{prepare_run_dir, write_summary};
use clap::Parser;
use har_core::dataset::OfflineDatasetSpec;
use har_core::ingest::Hand;
use har_core::pipeline::PipelineConfig;
use har_core::sample::SensorGeometry;
use har_core::synth::{gen_recording, SynthScript};
use har_core::ActionClass;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Parser, Serialize)]
pub struct Args {
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Segmented recordings per class (3 train / 1 val / 1 test at 5).
    #[arg(long, default_value_t = 5)]
    pub recordings_per_class: usize,
    /// 3-second instances (= windows) per segmented recording.
    #[arg(long, default_value_t = 8)]
    pub windows_per_recording: usize,
    #[arg(long, default_value_t = 3.0)]
    pub instance_secs: f64,
    /// Continuous all-action recordings for online evaluation.
    #[arg(long, default_value_t = 1)]
    pub online_recordings: usize,
    #[arg(long, default_value_t = 20.0)]
    pub online_action_secs: f64,
    #[arg(long, default_value_t = 4.0)]
    pub online_gap_secs: f64,
    /// Uniform timestamp jitter amplitude in microseconds (0 = ideal grids).
    #[arg(long, default_value_t = 0)]
    pub jitter_us: u64,
    /// Model-input frame side stored in the manifest's pipeline config.
    #[arg(long, default_value_t = 32)]
    pub side: u16,
    /// Sliding window length.
    #[arg(long, default_value_t = 90)]
    pub window: usize,
    #[arg(long, short, default_value_t = false)]
    pub verbose: bool,
}

pub fn run(args: Args) -> Result<(), CliError> {
    prepare_run_dir(&args.out, "synth-dataset", &args)?;
    let geometry = SensorGeometry::default();
    let pipeline = PipelineConfig {
        model_side: args.side,
        window_len: args.window,
        ..PipelineConfig::default()
    };
    let spec = OfflineDatasetSpec {
        recordings_per_class: args.recordings_per_class,
        windows_per_recording: args.windows_per_recording,
        instance_s: args.instance_secs,
        seed: args.seed,
    };
    let (n_train, n_val, _) = spec.split_counts()?;

    let mut manifest = SplitManifest {
        version: 1,
        seed: args.seed,
        pipeline,
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
        online: Vec::new(),
    };

    for class in ActionClass::ALL {
        for idx in 0..args.recordings_per_class {
            let mut script = spec.script(class, idx);
            script.timestamp_jitter_us = args.jitter_us;
            // Alternate hands across recordings, mirroring the two-hand protocol.
            script.hand = if idx % 2 == 0 { Hand::Right } else { Hand::Left };
            script.subject_id = format!("synth-{}-{idx}", class.name());
            let recording = gen_recording(&script, &geometry)?;
            let name = format!("rec_{}_{idx:02}", class.name());
            recording.save(&args.out.join(&name))?;
            if args.verbose {
                eprintln!("wrote {name} ({} frames)", recording.top.len());
            }
            let bucket = if idx < n_train {
                &mut manifest.train
            } else if idx < n_train + n_val {
                &mut manifest.val
            } else {
                &mut manifest.test
            };
            bucket.push(name);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed.wrapping_add(0x0E1))
        ;
    for idx in 0..args.online_recordings {
        let mut order: Vec<ActionClass> = ActionClass::ALL
            .into_iter()
            .filter(|c| !c.is_idle())
            .collect();
        order.shuffle(&mut rng);
        let mut script = SynthScript::continuous(
            &order,
            args.online_action_secs,
            args.online_gap_secs,
            args.seed.wrapping_add(0xC0 + idx as u64),
        );
        script.timestamp_jitter_us = args.jitter_us;
        script.subject_id = format!("synth-online-{idx}");
        let recording = gen_recording(&script, &geometry)?;
        let name = format!("online_{idx:02}");
        recording.save(&args.out.join(&name))?;
        if args.verbose {
            eprintln!("wrote {name} ({:.0}s)", recording.duration_us() as f64 / 1e6);
        }
        manifest.online.push(name);
    }

    manifest.save(&args.out)?;

    // Every class must appear in every split; warn otherwise.
    for (split, names) in [("train", &manifest.train), ("val", &manifest.val), ("test", &manifest.test)] {
        let mut present = [false; ActionClass::COUNT];
        for name in names {
            for class in ActionClass::ALL {
                if name.contains(&format!("rec_{}_", class.name())) {
                    present[class.index()] = true;
                }
            }
        }
        let missing: Vec<&str> = ActionClass::ALL
            .iter()
            .filter(|c| !present[c.index()])
            .map(|c| c.name())
            .collect();
        if !missing.is_empty() {
            eprintln!("warning: classes missing from {split} split: {}", missing.join(", "));
        }
    }

    write_summary(
        &args.out,
        &serde_json::json!({
            "recordings": manifest.train.len() + manifest.val.len() + manifest.test.len(),
            "online": manifest.online.len(),
            "windows_per_class": args.recordings_per_class * args.windows_per_recording,
        }),
    )?;
    println!(
        "dataset at {}: {} train / {} val / {} test recordings, {} online",
        args.out.display(),
        manifest.train.len(),
        manifest.val.len(),
        manifest.test.len(),
        manifest.online.len()
    );
    Ok(())
}
