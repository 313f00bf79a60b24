mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Overrides the output directory of every subcommand except when `--out`
/// is given.
pub const OUT_DIR_ENV: &str = "SOFTPU_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "softpu", version, about = "Soft-label PU learning toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON config for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; replaces the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (default: the config's `output_dir`, else `softpu-out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Write a synthetic dataset and its provenance record.
    Generate,
    /// Train the soft-label arm and the hard-label baseline and compare them.
    Experiment,
    /// Score a dataset with a saved model and emit ROC curves.
    Eval,
    /// Compare AUC_SPU of given scores with the soft-label upper bound.
    BoundCheck,
    /// Fit the pass-probability prior to check records and emit soft labels.
    FitPrior,
    /// Enumerate the ROC frontiers of a finite problem and run the checks.
    Frontier,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = commands::Context {
        config: cli.config,
        seed: cli.seed,
        out: cli.out,
        env_out: std::env::var_os(OUT_DIR_ENV).map(PathBuf::from),
    };
    let result = match cli.command {
        Command::Generate => commands::generate(&ctx),
        Command::Experiment => commands::experiment(&ctx),
        Command::Eval => commands::eval(&ctx),
        Command::BoundCheck => commands::bound_check(&ctx),
        Command::FitPrior => commands::fit_prior(&ctx),
        Command::Frontier => commands::frontier(&ctx),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
