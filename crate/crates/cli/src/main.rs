mod analyze;
mod figures;
mod runs;
mod util;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::util::{exit_code, parse_setting};

/// Quasipinning analysis of N-fermion states against generalized Pauli
/// constraints.
#[derive(Parser, Debug)]
#[command(name = "pinlab", version, about)]
struct Cli {
    /// Worker threads for sampling (default: available cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analyze one state file: occupations, self-consistent expansion and a
    /// report per constraint.
    Analyze(AnalyzeArgs),
    /// Sample random states and write quasipinned records as CSV.
    Sample(SampleArgs),
    /// Residual-weight scan for the first and third (3,7) constraints.
    Conjecture(ConjectureArgs),
    /// Print the constraints of a setting.
    Catalog(CatalogArgs),
    /// Sample random states and check every bound on every state.
    VerifyBounds(VerifyArgs),
    /// Write the scatter data behind a figure as CSV files.
    Figures(FiguresArgs),
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// State file (JSON).
    #[arg(long)]
    pub state: PathBuf,
    /// Expected setting `N,d`; must match the file.
    #[arg(long, value_parser = parse_setting)]
    pub setting: Option<(usize, usize)>,
    /// Include the 1-RDM in the output.
    #[arg(long)]
    pub dump_rdm: bool,
    /// Constraint file merged over the built-in table.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Print only the JSON report.
    #[arg(long)]
    pub json: bool,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Gap below which adjacent occupations count as degenerate.
    #[arg(long, default_value_t = pinlab::rdm::DEFAULT_TOL_DEG)]
    pub tol_deg: f64,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// Setting `N,d`.
    #[arg(long, value_parser = parse_setting)]
    pub setting: (usize, usize),
    /// Number of random states.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Quasipinning threshold on D (default: 0.01, or 0.05 for d >= 8).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Analyze every constraint on every state.
    #[arg(long)]
    pub check_all: bool,
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the JSON summary to this file.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long, default_value_t = pinlab::sampler::DEFAULT_SHARD_SIZE, value_parser = clap::value_parser!(u64).range(1..))]
    pub shard_size: u64,
}

#[derive(Args, Debug)]
pub struct ConjectureArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.005)]
    pub threshold: f64,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CatalogArgs {
    #[arg(long, value_parser = parse_setting)]
    pub setting: (usize, usize),
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_parser = parse_setting)]
    pub setting: (usize, usize),
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub catalog: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FiguresArgs {
    /// Figure number: 3 to 8.
    #[arg(long, value_parser = clap::value_parser!(u8).range(3..=8))]
    pub fig: u8,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Quasipinning threshold (default depends on the figure).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Constraint file; required for figure 8.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.map(|t| t as usize);
    let result = match cli.command {
        Command::Analyze(a) => analyze::run(&a),
        Command::Sample(a) => runs::sample(&a, threads),
        Command::Conjecture(a) => runs::conjecture(&a, threads),
        Command::Catalog(a) => runs::catalog(&a),
        Command::VerifyBounds(a) => runs::verify(&a, threads),
        Command::Figures(a) => figures::run(&a, threads),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
