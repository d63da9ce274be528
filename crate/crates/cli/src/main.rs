//! `piconvae`: generate, attack, train, detect, evaluate and plot.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 training failure. Failures print one `error class=.. kind=..: ..`
//! line on stderr.

mod experiments;
mod failure;
mod inputs;
mod output;
mod pipeline;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "piconvae", version, about = "Physics-informed autoencoder attack detection for PMU-style measurements")]
struct Cli {
    /// Directory that receives every output file.
    #[arg(long, global = true, env = "PICONVAE_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a clean synthetic measurement series (series.csv).
    Generate(pipeline::GenerateArgs),
    /// Inject attacks into the test split of a series (attacked.csv).
    Inject(pipeline::InjectArgs),
    /// Train a detector on the training split (checkpoint.json or kmeans.json).
    Train(pipeline::TrainArgs),
    /// Score the test split, threshold against validation (scores.csv, report.json).
    Detect(pipeline::DetectArgs),
    /// Tabulate metrics from reports or score files (metrics.csv).
    Evaluate(experiments::EvaluateArgs),
    /// Run several detectors on one synthetic experiment (comparison.csv).
    Compare(experiments::CompareArgs),
    /// Retrain on shrinking leading fractions of the training split (scarcity.csv).
    Scarcity(experiments::ScarcityArgs),
    /// Render SVG plots of loss curves, score traces or reconstructions.
    Plot(plot::PlotArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let out = cli.out_dir;
    match cli.command {
        Command::Generate(a) => pipeline::generate(a, &out),
        Command::Inject(a) => pipeline::inject(a, &out),
        Command::Train(a) => pipeline::train(a, &out),
        Command::Detect(a) => pipeline::detect(a, &out),
        Command::Evaluate(a) => experiments::evaluate(a, &out),
        Command::Compare(a) => experiments::compare(a, &out),
        Command::Scarcity(a) => experiments::scarcity(a, &out),
        Command::Plot(a) => plot::plot(a, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let first = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("error class=usage kind=arguments: {first}");
            return ExitCode::from(failure::exit_code(piconvae_core::ErrorClass::Usage));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, line) = failure::reason_line(&e);
            eprintln!("{line}");
            ExitCode::from(code)
        }
    }
}
