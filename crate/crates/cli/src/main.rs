mod commands;
mod config;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::ConfigArgs;
use crate::failure::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "tubeloc",
    version,
    about = "Discover and localize recurring objects in video collections"
)]
struct Cli {
    /// Worker threads for the discovery phases (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Generate a synthetic collection with planted objects.
    Synth(SynthArgs),
    /// Run discovery on a collection.
    Run(RunArgs),
    /// Score results against ground truth.
    Eval(EvalArgs),
    /// Pretty-print a JSON or JSON Lines artifact.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generator settings (TOML or JSON).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Descriptor noise level override.
    #[arg(long, allow_negative_numbers = true)]
    pub noise: Option<f64>,
    #[arg(long, env = "TUBELOC_OUT", default_value = "tubeloc-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Collection manifest (`collection.jsonl`).
    #[arg(long)]
    pub collection: PathBuf,
    #[arg(long, env = "TUBELOC_OUT", default_value = "tubeloc-out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory written by `run`.
    #[arg(long, env = "TUBELOC_OUT", default_value = "tubeloc-out")]
    pub results: PathBuf,
    /// Collection manifest carrying the ground truth.
    #[arg(long)]
    pub collection: PathBuf,
    /// Also score every saved iteration.
    #[arg(long)]
    pub per_iteration: bool,
    /// Report destination (default: `<results>/eval.json`).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    pub path: PathBuf,
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::validation(anyhow::anyhow!(
                "--threads must be >= 1"
            )));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::runtime(e.into()))?;
    }
    match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Run(a) => commands::run(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Inspect(a) => commands::inspect(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
