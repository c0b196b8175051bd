//! End-to-end exercise of the `har` binary: dataset generation, training,
//! offline and online evaluation, closed-loop simulation, the stream
//! subcommands, report rendering, exit codes and reproducibility.

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};

fn har() -> Command {
    Command::new(env!("CARGO_BIN_EXE_har"))
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("spawn har");
    assert!(
        out.status.success(),
        "command failed ({:?}):\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).to_string()
}

/// A tiny-architecture training invocation shared by the tests.
fn tiny_train(manifest: &Path, out: &Path, epochs: usize, extra: &[&str]) -> String {
    let mut cmd = har();
    cmd.args([
        "train",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--epochs",
        &epochs.to_string(),
        "--batch",
        "16",
        "--optimizer",
        "adam",
        "--embed-dim",
        "8",
        "--heads",
        "2",
        "--depth",
        "1",
        "--feature-dim",
        "8",
        "--tubelet-t",
        "18",
        "--imu-group",
        "18",
        "--seed",
        "3",
    ]);
    cmd.args(extra);
    run_ok(&mut cmd)
}

struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

fn dataset_fixture() -> &'static Workspace {
    use std::sync::OnceLock;
    static FIXTURE: OnceLock<Workspace> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let data = root.join("data");
        run_ok(har().args([
            "synth-dataset",
            "--out",
            data.to_str().unwrap(),
            "--seed",
            "11",
            "--recordings-per-class",
            "3",
            "--windows-per-recording",
            "2",
            "--online-recordings",
            "1",
            "--online-action-secs",
            "4",
            "--online-gap-secs",
            "1.5",
        ]));
        assert!(data.join("manifest.json").exists());
        assert!(data.join("config_echo.json").exists());
        assert!(data.join("rec_pinching_00/metadata.json").exists());
        Workspace { _dir: dir, root }
    })
}

#[test]
fn dataset_train_eval_offline_round_trip() {
    let ws = dataset_fixture();
    let data = ws.root.join("data");
    let run = ws.root.join("train_a");
    let stdout = tiny_train(&data.join("manifest.json"), &run, 2, &[]);
    assert!(stdout.contains("checkpoint"), "{stdout}");
    assert!(run.join("checkpoint.bin").exists());
    let metrics = std::fs::read_to_string(run.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("epoch,train_loss,train_acc,val_acc\n"));
    assert_eq!(metrics.lines().count(), 3);

    let eval = ws.root.join("eval_offline");
    let stdout = run_ok(har().args([
        "eval-offline",
        "--checkpoint",
        run.join("checkpoint.bin").to_str().unwrap(),
        "--manifest",
        data.join("manifest.json").to_str().unwrap(),
        "--out",
        eval.to_str().unwrap(),
    ]));
    assert!(stdout.contains("accuracy"), "{stdout}");
    let confusion = std::fs::read_to_string(eval.join("confusion.csv")).unwrap();
    assert_eq!(confusion.lines().count(), 16);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(eval.join("summary.json")).unwrap()).unwrap();
    assert!(summary["accuracy"].as_f64().is_some());
    assert!(summary["macro_f1"].as_f64().is_some());

    // Same config and seed reproduce byte-identical primary outputs.
    let run_b = ws.root.join("train_b");
    tiny_train(&data.join("manifest.json"), &run_b, 2, &[]);
    let a = std::fs::read(run.join("checkpoint.bin")).unwrap();
    let b = std::fs::read(run_b.join("checkpoint.bin")).unwrap();
    assert_eq!(a, b, "training is not reproducible");
    assert_eq!(
        std::fs::read(run.join("metrics.csv")).unwrap(),
        std::fs::read(run_b.join("metrics.csv")).unwrap()
    );
}

#[test]
fn resume_continues_and_ablation_trains() {
    let ws = dataset_fixture();
    let data = ws.root.join("data");
    let manifest = data.join("manifest.json");

    let fresh = ws.root.join("resume_fresh");
    tiny_train(&manifest, &fresh, 1, &[]);
    let resumed = ws.root.join("resume_cont");
    tiny_train(
        &manifest,
        &resumed,
        1,
        &["--resume", fresh.join("checkpoint.bin").to_str().unwrap()],
    );

    // Resuming starts from the trained parameters: its first epoch must sit
    // at a lower loss than the fresh first epoch.
    let first_loss = |dir: &Path| -> f64 {
        let csv = std::fs::read_to_string(dir.join("metrics.csv")).unwrap();
        csv.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap()
    };
    assert!(
        first_loss(&resumed) < first_loss(&fresh),
        "resumed loss {} not below fresh loss {}",
        first_loss(&resumed),
        first_loss(&fresh)
    );

    // Unimodal ablations train through the same entry point.
    let imu_only = ws.root.join("resume_imu_only");
    tiny_train(&manifest, &imu_only, 1, &["--ablate", "imu-only"]);
    assert!(imu_only.join("checkpoint.bin").exists());
}

#[test]
fn eval_online_and_report_render() {
    let ws = dataset_fixture();
    let data = ws.root.join("data");
    let run = ws.root.join("train_online");
    tiny_train(&data.join("manifest.json"), &run, 2, &[]);

    let eval = ws.root.join("eval_online");
    let stdout = run_ok(har().args([
        "eval-online",
        "--checkpoint",
        run.join("checkpoint.bin").to_str().unwrap(),
        "--recording",
        data.join("online_00").to_str().unwrap(),
        "--out",
        eval.to_str().unwrap(),
    ]));
    assert!(stdout.contains("True Pos. (%)"), "{stdout}");
    for file in ["event_report.csv", "event_report.txt", "timeline.jsonl", "frame_accuracy.csv"] {
        assert!(eval.join(file).exists(), "missing {file}");
    }
    // Timeline segments tile the scored interval.
    let timeline = std::fs::read_to_string(eval.join("timeline.jsonl")).unwrap();
    let mut prev_end: Option<u64> = None;
    for line in timeline.lines() {
        let seg: serde_json::Value = serde_json::from_str(line).unwrap();
        let start = seg["start_us"].as_u64().unwrap();
        if let Some(end) = prev_end {
            assert_eq!(start, end);
        }
        prev_end = seg["end_us"].as_u64();
    }

    let rendered = run_ok(har().args([
        "report",
        eval.join("event_report.csv").to_str().unwrap(),
        eval.join("frame_accuracy.csv").to_str().unwrap(),
    ]));
    assert!(rendered.contains("True Pos. (%)"));
    assert!(rendered.contains("global"));
}

#[test]
fn hrc_sim_oracle_writes_trials_and_stats() {
    let ws = dataset_fixture();
    let out = ws.root.join("hrc_oracle");
    let stdout = run_ok(har().args([
        "hrc-sim",
        "--oracle",
        "--out",
        out.to_str().unwrap(),
        "--subjects",
        "2",
        "--actions",
        "3",
        "--seed",
        "5",
    ]));
    assert!(stdout.contains("median"), "{stdout}");
    let trials = std::fs::read_to_string(out.join("trials.jsonl")).unwrap();
    assert_eq!(trials.lines().count(), 2);
    for line in trials.lines() {
        let log: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(log["transitions"].as_array().unwrap().len(), 3);
    }
    let stats = std::fs::read_to_string(out.join("latency_stats.csv")).unwrap();
    assert!(stats.starts_with("count,mean_s,median_s,std_s"));
    assert!(out.join("boxplot.csv").exists());
}

#[test]
fn hrc_sim_with_model_recognizer() {
    let ws = dataset_fixture();
    let data = ws.root.join("data");
    let run = ws.root.join("train_hrc");
    tiny_train(&data.join("manifest.json"), &run, 6, &[]);

    // Command the class this (deliberately small) model handles best, read
    // off its own confusion matrix.
    let eval = ws.root.join("hrc_eval");
    run_ok(har().args([
        "eval-offline",
        "--checkpoint",
        run.join("checkpoint.bin").to_str().unwrap(),
        "--manifest",
        data.join("manifest.json").to_str().unwrap(),
        "--out",
        eval.to_str().unwrap(),
    ]));
    let confusion = std::fs::read_to_string(eval.join("confusion.csv")).unwrap();
    let mut best = ("pinching".to_string(), -1i64);
    for line in confusion.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let name = cells[0];
        if name == "idle" {
            continue;
        }
        let diag_col = 1 + confusion
            .lines()
            .next()
            .unwrap()
            .split(',')
            .skip(1)
            .position(|c| c == name)
            .unwrap();
        let hits: i64 = cells[diag_col].parse().unwrap();
        if hits > best.1 {
            best = (name.to_string(), hits);
        }
    }

    let out = ws.root.join("hrc_model");
    run_ok(har().args([
        "hrc-sim",
        "--checkpoint",
        run.join("checkpoint.bin").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--subjects",
        "1",
        "--classes",
        &best.0,
        "--debounce",
        "1",
        "--timeout",
        "240",
        "--seed",
        "6",
    ]));
    let trials = std::fs::read_to_string(out.join("trials.jsonl")).unwrap();
    assert_eq!(trials.lines().count(), 1);
    let log: serde_json::Value = serde_json::from_str(trials.lines().next().unwrap()).unwrap();
    assert_eq!(log["transitions"][0]["commanded"].as_str().unwrap(), best.0);
}

fn spawn_server(args: &[&str]) -> (Child, String) {
    let mut child = har()
        .args(args)
        .stdout(Stdio::piped())
        .spawn()
        .expect("spawn serve");
    let stdout = child.stdout.take().unwrap();
    let mut line = String::new();
    BufReader::new(stdout).read_line(&mut line).unwrap();
    let addr = line
        .rsplit(' ')
        .find(|tok| tok.contains(':'))
        .expect("address in banner")
        .trim()
        .to_string();
    (child, addr)
}

#[test]
fn serve_record_replay_round_trip() {
    let ws = dataset_fixture();
    let captured = ws.root.join("captured");
    let replayed = ws.root.join("replayed");

    // Serve a generated demo sequence unpaced, record it.
    let (mut server, addr) = spawn_server(&[
        "serve",
        "--endpoint",
        "127.0.0.1:0",
        "--demo",
        "--demo-action-secs",
        "1.0",
        "--demo-gap-secs",
        "0.5",
        "--speed",
        "0",
        "--seed",
        "21",
    ]);
    run_ok(har().args([
        "record",
        "--endpoint",
        &addr,
        "--out",
        captured.to_str().unwrap(),
        "--subject",
        "loop",
    ]));
    server.kill().ok();
    server.wait().ok();

    // Replay the capture (unpaced) and re-record it.
    let (mut replayer, addr) = spawn_server(&[
        "replay",
        "--recording",
        captured.to_str().unwrap(),
        "--endpoint",
        "127.0.0.1:0",
        "--speed",
        "0",
    ]);
    run_ok(har().args([
        "record",
        "--endpoint",
        &addr,
        "--out",
        replayed.to_str().unwrap(),
        "--subject",
        "loop",
    ]));
    replayer.kill().ok();
    replayer.wait().ok();

    let a = har_core::ingest::Recording::load(&captured).unwrap();
    let b = har_core::ingest::Recording::load(&replayed).unwrap();
    assert_eq!(a.imu, b.imu);
    assert_eq!(a.top, b.top);
    assert_eq!(a.bottom, b.bottom);
}

#[test]
fn exit_codes_classify_failures() {
    // Unknown flag: clap exits 2 (configuration).
    let out = har().args(["train", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Invalid architecture: side not divisible by patch.
    let ws = dataset_fixture();
    let data = ws.root.join("data");
    let out = har()
        .args([
            "train",
            "--manifest",
            data.join("manifest.json").to_str().unwrap(),
            "--out",
            ws.root.join("bad").to_str().unwrap(),
            "--patch",
            "7",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    // Missing recording directory: data error.
    let out = har()
        .args([
            "eval-online",
            "--checkpoint",
            "/nonexistent/ckpt.bin",
            "--recording",
            "/nonexistent/rec",
            "--out",
            ws.root.join("bad2").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
