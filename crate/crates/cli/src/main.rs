//! `har`: command-line entry point wiring the sensor pipeline, classifier,
//! scoring and closed-loop simulation into runnable experiments.

mod commands;
mod errors;
mod manifest;
mod runcfg;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "har", version, about = "Multi-modal hand-activity recognition experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic segmented dataset plus continuous recordings,
    /// with a 60/20/20 split manifest.
    SynthDataset(commands::synth_dataset::Args),
    /// Train the late-fusion classifier from a split manifest.
    Train(commands::train::Args),
    /// Evaluate a checkpoint on the manifest's test split.
    EvalOffline(commands::eval_offline::Args),
    /// Stream a labeled recording through the online pipeline and score it.
    EvalOnline(commands::eval_online::Args),
    /// Run closed-loop trials with the oracle or a trained checkpoint.
    HrcSim(commands::hrc_sim::Args),
    /// Serve sensor streams (recording, script, or demo) over TCP.
    Serve(commands::streams::ServeArgs),
    /// Connect to a stream server and record to a container directory.
    Record(commands::streams::RecordArgs),
    /// Replay a recording's streams to an endpoint at a given speed.
    Replay(commands::streams::ReplayArgs),
    /// Render CSV/JSONL output files as aligned text tables.
    Report(commands::report::Args),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SynthDataset(args) => commands::synth_dataset::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::EvalOffline(args) => commands::eval_offline::run(args),
        Command::EvalOnline(args) => commands::eval_online::run(args),
        Command::HrcSim(args) => commands::hrc_sim::run(args),
        Command::Serve(args) => commands::streams::serve(args),
        Command::Record(args) => commands::streams::record(args),
        Command::Replay(args) => commands::streams::replay(args),
        Command::Report(args) => commands::report::run(args),
    };
    if let Err(e) = result {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
