//! `har serve` / `har record` / `har replay`: thin wrappers over the stream
//! server, client recorder and paced replay.

use crate::errors::CliError;
use clap::Parser;
use har_core::ingest::codec::VERSION;
use har_core::ingest::recording::CONTAINER_VERSION;
use har_core::ingest::{connect, record as record_streams, Hand, Pace, Recording, RecordingMeta, StreamServer};
use har_core::sample::SensorGeometry;
use har_core::synth::{gen_recording, SynthScript};
use har_core::ActionClass;
use serde::Serialize;
use std::path::PathBuf;
use std::sync::Arc;

#[derive(Debug, Parser, Serialize)]
pub struct ServeArgs {
    /// host:port to listen on (port 0 picks a free port).
    #[arg(long, default_value = "127.0.0.1:7700")]
    pub endpoint: String,
    /// Serve an existing recording container.
    #[arg(long, conflicts_with_all = ["script", "demo"])]
    pub recording: Option<PathBuf>,
    /// Serve a generated recording from a script document (JSON).
    #[arg(long, conflicts_with = "demo")]
    pub script: Option<PathBuf>,
    /// Serve a generated demo sequence of all actions.
    #[arg(long, default_value_t = false)]
    pub demo: bool,
    #[arg(long, default_value_t = 2.0)]
    pub demo_action_secs: f64,
    #[arg(long, default_value_t = 1.0)]
    pub demo_gap_secs: f64,
    /// Pacing: original inter-arrival times divided by this; 0 = unpaced.
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn source_recording(args: &ServeArgs) -> Result<Recording, CliError> {
    if let Some(dir) = &args.recording {
        return Ok(Recording::load(dir)?);
    }
    if let Some(path) = &args.script {
        let bytes = std::fs::read(path)?;
        let script: SynthScript = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::config(format!("script parse: {e}")))?;
        return Ok(gen_recording(&script, &SensorGeometry::default())?);
    }
    if args.demo {
        let order: Vec<ActionClass> = ActionClass::ALL
            .into_iter()
            .filter(|c| !c.is_idle())
            .collect();
        let script = SynthScript::continuous(
            &order,
            args.demo_action_secs,
            args.demo_gap_secs,
            args.seed,
        );
        return Ok(gen_recording(&script, &SensorGeometry::default())?);
    }
    Err(CliError::config(
        "pass one of --recording, --script or --demo",
    ))
}

pub fn serve(args: ServeArgs) -> Result<(), CliError> {
    let recording = Arc::new(source_recording(&args)?);
    let server = StreamServer::serve_recording(
        &args.endpoint,
        Arc::clone(&recording),
        Pace::from_speed(args.speed),
    )?;
    println!("serving on {}", server.local_addr());
    use std::io::Write;
    std::io::stdout().flush().ok();
    // Serve until killed.
    loop {
        std::thread::sleep(std::time::Duration::from_secs(3600));
    }
}

#[derive(Debug, Parser, Serialize)]
pub struct RecordArgs {
    #[arg(long)]
    pub endpoint: String,
    /// Destination container directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "recorded")]
    pub subject: String,
    #[arg(long, value_parser = parse_hand, default_value = "right")]
    pub hand: Hand,
}

fn parse_hand(s: &str) -> Result<Hand, String> {
    match s {
        "left" => Ok(Hand::Left),
        "right" => Ok(Hand::Right),
        other => Err(format!("unknown hand `{other}` (left|right)")),
    }
}

pub fn record(args: RecordArgs) -> Result<(), CliError> {
    let client = connect(&args.endpoint, 256)?;
    let meta = RecordingMeta {
        container_version: CONTAINER_VERSION,
        protocol_version: VERSION,
        subject_id: args.subject.clone(),
        hand: args.hand,
        geometry: SensorGeometry::default(),
        start_us: 0,
        end_us: 0, // filled from the received streams
        labels: None,
    };
    let recording = record_streams(client, meta)?;
    recording.save(&args.out)?;
    println!(
        "recorded {} imu / {} top / {} bottom packets to {}",
        recording.imu.len(),
        recording.top.len(),
        recording.bottom.len(),
        args.out.display()
    );
    Ok(())
}

#[derive(Debug, Parser, Serialize)]
pub struct ReplayArgs {
    /// Source recording container.
    #[arg(long)]
    pub recording: PathBuf,
    #[arg(long, default_value = "127.0.0.1:7700")]
    pub endpoint: String,
    /// Pacing factor; 0 = as fast as possible.
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
}

pub fn replay(args: ReplayArgs) -> Result<(), CliError> {
    let recording = Arc::new(Recording::load(&args.recording)?);
    let server = StreamServer::serve_recording(
        &args.endpoint,
        Arc::clone(&recording),
        Pace::from_speed(args.speed),
    )?;
    println!(
        "replaying {} ({:.1}s) on {} at speed {}",
        args.recording.display(),
        recording.duration_us() as f64 / 1e6,
        server.local_addr(),
        args.speed
    );
    use std::io::Write;
    std::io::stdout().flush().ok();
    loop {
        std::thread::sleep(std::time::Duration::from_secs(3600));
    }
}
