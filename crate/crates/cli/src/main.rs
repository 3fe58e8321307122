//! Command-line front end of the central-spin simulator.

mod commands;
mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::SolverKind;
use run::CliError;

#[derive(Parser)]
#[command(
    name = "centralspin",
    version,
    about = "Exact electron-spin dynamics in a bath of hyperfine-coupled nuclear spins"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured initial state and emit a CSV trajectory
    Evolve {
        /// TOML run configuration
        config: PathBuf,
        /// Override the configured solver
        #[arg(long, value_enum)]
        solver: Option<SolverKind>,
        /// Output CSV path (default: the configured path, else stdout)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for the per-sector jobs (default: all cores)
        #[arg(long)]
        workers: Option<usize>,
        /// Also run a second solver and report the trajectory difference
        #[arg(long, value_enum)]
        compare: Option<SolverKind>,
    },
    /// Print the conserved-total-spin sector table for N nuclei
    Sectors {
        n: usize,
    },
    /// Exact poles of one sector against both pole approximations
    Poles {
        config: PathBuf,
        /// Paired sector index m
        #[arg(long, default_value_t = 0)]
        sector_m: usize,
        /// Also write the pole sets as CSV
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the sector route against brute-force full-space evolution
    OracleCheck {
        config: PathBuf,
        /// Additional random product states to check
        #[arg(long, default_value_t = 0)]
        runs: usize,
        /// Seed for the random states
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check the density-matrix integrator against the sector route
    LiouvilleCheck {
        config: PathBuf,
    },
    /// Dump the diagonal energies and coupling matrix of one sector
    Blocks {
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        sector_m: usize,
    },
}

fn main() -> ExitCode {
    // die quietly when a pipe closes under us (e.g. `evolve ... | head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Evolve {
            config,
            solver,
            out,
            workers,
            compare,
        } => commands::cmd_evolve(&config, solver, out, workers, compare),
        Command::Sectors { n } => commands::cmd_sectors(n),
        Command::Poles {
            config,
            sector_m,
            out,
        } => commands::cmd_poles(&config, sector_m, out),
        Command::OracleCheck {
            config,
            runs,
            seed,
            workers,
        } => commands::cmd_oracle_check(&config, runs, seed, workers),
        Command::LiouvilleCheck { config } => commands::cmd_liouville_check(&config),
        Command::Blocks { config, sector_m } => commands::cmd_blocks(&config, sector_m),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err @ CliError::Invariant(_)) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
