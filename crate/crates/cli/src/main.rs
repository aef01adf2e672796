use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cuspidal::Error;

mod commands;
mod output;

#[derive(Parser, Debug)]
#[command(name = "cuspidal", version, about = "Orbits, Patterson-Sullivan measures and gauge dichotomies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `[run] seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (default `[run] out`, else `out`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides `[run] t_max`.
    #[arg(long = "t-max", global = true)]
    pub t_max: Option<f64>,
    /// Overrides the sample count of the command.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Orbit points within hyperbolic distance T of the origin.
    Orbit,
    /// Critical exponent estimate from orbit growth.
    Delta,
    /// Seeded samples of the limit set.
    Limitset,
    /// Series verdicts for H^psi and P^psi.
    GaugeClassify,
    /// Residuals against the global measure formula.
    GmfCheck,
    /// Shrinking-target hits around a parabolic orbit.
    Khinchin,
    /// Density-trace verdicts, synthetic or empirical, against the prediction.
    Dichotomy,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Configuration(_) => 2,
        Error::InsufficientData(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: cannot start {n} threads");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(commands::Status::Done) => ExitCode::SUCCESS,
        Ok(commands::Status::Undecided(why)) => {
            eprintln!("undecided: {why}");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
