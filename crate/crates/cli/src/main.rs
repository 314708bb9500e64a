//! `ser`: command-line front end for the speech emotion recognition toolkit.

mod commands;
mod config;
mod run_dir;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ser_core::Error;

#[derive(Parser, Debug)]
#[command(name = "ser", version, about = "Speech emotion recognition from MFCC windows")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// TOML run configuration (flags override its values).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed for splits, initialisation, shuffling and dropout.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for produced files; a run_manifest.json lists them.
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Manifest of WAV files -> binary feature cache.
    Extract(commands::ExtractArgs),
    /// Scan a corpus directory and check its per-class counts.
    ValidateDataset(commands::ValidateArgs),
    /// Assign train/val/test splits to a manifest.
    Split(commands::SplitArgs),
    /// Train a kernel SVM on cached features.
    TrainSvm(commands::TrainSvmArgs),
    /// Train the CNN on cached features.
    TrainCnn(commands::TrainCnnArgs),
    /// Evaluate a saved model on cached features.
    Eval(commands::EvalArgs),
    /// Accuracy of both SVM kernels across MFCC counts.
    SweepSvm(commands::SweepArgs),
    /// Write time-reversed and polarity-inverted copies of a manifest.
    Augment(commands::AugmentArgs),
    /// Sliding-window classification of a WAV file.
    Stream(commands::StreamArgs),
    /// Finite-difference check of the CNN gradients.
    GradientCheck(commands::GradCheckArgs),
    /// Per-layer output shapes and parameter counts of the CNN.
    AuditParams(commands::AuditArgs),
    /// Full protocol on the RAVDESS/TESS corpora with a comparison table.
    Reproduce(commands::ReproduceArgs),
}

/// 0 success, 1 usage or configuration error, 2 data error, 3 numerical
/// failure.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 1,
        Error::Numerical(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{}", e.render());
                    ExitCode::from(1)
                }
            };
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.global.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .parse_default_env()
        .format_timestamp(None)
        .init();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
