//! `mlfm` command-line driver.
//!
//! Exit status: 0 on success, 1 for invalid configuration or arguments,
//! 2 for failures during a run (I/O, checkpoints, divergence).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mlfm::graph::Arch;
use mlfm::DType;

#[derive(Parser, Debug)]
#[command(name = "mlfm", version, about = "Multiscale low-frequency memory experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Experiment configuration (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides both the dataset and the training seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Validate and print the resolved configuration, then exit.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Overrides the element type.
    #[arg(long, global = true)]
    pub dtype: Option<DType>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a graph and write checkpoint, report and resolved config.
    Train,
    /// Evaluate a checkpoint on the test split.
    Eval {
        /// Defaults to `<output>/checkpoint.mlfm`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Baseline plus the 15 placements, with and without the supplement gate.
    AblatePlacement,
    /// All registered wavelet bases at the configured placement.
    AblateBasis,
    /// Wavelet, max and average gate downsampling at the configured placement.
    AblateDownsampler,
    /// Wavelet registry utilities.
    Wavelet {
        #[command(subcommand)]
        command: WaveletCommand,
    },
    /// Per-node SSIM between features and the image's wavelet approximation.
    SsimProfile {
        #[arg(long, default_value_t = 20)]
        images: usize,
        /// Image side; every node map must stay at least 11 pixels wide.
        #[arg(long, default_value_t = 512)]
        size: usize,
        /// Load parameters instead of using the random initialisation.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Parameter and multiply-accumulate totals.
    Count {
        /// `micro_resnet`, `micro_fcn` or `resnet18`; overrides the config.
        #[arg(long)]
        arch: Option<Arch>,
    },
}

#[derive(Subcommand, Debug)]
enum WaveletCommand {
    /// Perfect reconstruction, DC gain and energy checks for every basis.
    Selftest,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Train => commands::train(&cli.common),
        Command::Eval { checkpoint } => commands::eval(&cli.common, checkpoint),
        Command::AblatePlacement => commands::ablate(&cli.common, commands::Grid::Placement),
        Command::AblateBasis => commands::ablate(&cli.common, commands::Grid::Basis),
        Command::AblateDownsampler => commands::ablate(&cli.common, commands::Grid::Downsampler),
        Command::Wavelet {
            command: WaveletCommand::Selftest,
        } => commands::wavelet_selftest(),
        Command::SsimProfile {
            images,
            size,
            checkpoint,
        } => commands::ssim_profile(&cli.common, images, size, checkpoint),
        Command::Count { arch } => commands::count(&cli.common, arch),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
