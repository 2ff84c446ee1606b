use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Parser, Debug)]
#[command(
    name = "sar-restore",
    version,
    about = "Synthetic SAR formation, sidelobe reduction and restoration"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fixed-order gradient reduction.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a dataset directory.
    Gen(commands::GenArgs),
    /// Train a restoration network on a dataset.
    Train(commands::TrainArgs),
    /// Evaluate a checkpoint (or the identity baseline) on a split.
    Eval(commands::EvalArgs),
    /// Restore one SLC with a checkpoint.
    Restore(commands::RestoreArgs),
    /// Re-window the spectrum of an SLC.
    Apodize(commands::ApodizeArgs),
    /// Spatially variant apodization of an SLC.
    Sva(commands::SvaArgs),
    /// Image-quality metrics of an estimate against a reference.
    Metrics(commands::MetricsArgs),
    /// Merge eval CSVs into one model-by-metric table.
    Report(commands::ReportArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if cli.common.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.common.threads)
            .build_global()?;
    }
    std::fs::create_dir_all(&cli.common.out)?;
    let c = &cli.common;
    match cli.command {
        Command::Gen(a) => commands::gen(c, a),
        Command::Train(a) => commands::train(c, a),
        Command::Eval(a) => commands::eval(c, a),
        Command::Restore(a) => commands::restore(c, a),
        Command::Apodize(a) => commands::apodize(c, a),
        Command::Sva(a) => commands::sva(c, a),
        Command::Metrics(a) => commands::metrics(c, a),
        Command::Report(a) => commands::report(c, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("{first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
