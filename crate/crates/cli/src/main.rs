//! `calabi-bergman`: profiles, band sweeps, center-of-mass tables and the
//! identity suite from the command line.

mod commands;
mod config;
mod suite;
mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Flags, RunConfig};
use table::Table;

#[derive(Parser, Debug)]
#[command(name = "calabi-bergman", version, about = "Momentum profiles, fiber Bergman integrals and center-of-mass diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// c0, tau0, eta2(tau0), cofactor minimum and profile samples.
    Profile,
    /// Dimensions, volumes, sigma and band totals per k.
    Dims,
    /// Exact and Laplace fiber integrals per band at one k.
    Bands,
    /// Per-band center-of-mass entries at one k.
    Mu,
    /// Energy summary per k.
    Energy,
    /// Runs the identity suite; exits with 3 when a hard check fails.
    Verify,
}

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Numerical(String),
    Io(String),
    Verification(usize),
}

impl From<calabi_bergman::Error> for CliError {
    fn from(e: calabi_bergman::Error) -> Self {
        use calabi_bergman::Error as E;
        match e {
            E::InvalidParams(_) | E::Domain { .. } => CliError::Invalid(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn emit(table: &Table, cfg: &RunConfig) -> Result<(), CliError> {
    let written = match &cfg.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            table.write(cfg.format, &mut w).and_then(|_| w.flush())
        }
        None => {
            let mut w = io::stdout().lock();
            table.write(cfg.format, &mut w).and_then(|_| w.flush())
        }
    };
    match written {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = RunConfig::from_flags(&cli.flags)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    pool.install(|| {
        let (table, failures) = match cli.command {
            Command::Profile => (commands::profile(&cfg)?, 0),
            Command::Dims => (commands::dims(&cfg)?, 0),
            Command::Bands => (commands::bands(&cfg)?, 0),
            Command::Mu => (commands::mu(&cfg)?, 0),
            Command::Energy => (commands::energy(&cfg)?, 0),
            Command::Verify => {
                let records = suite::run(&cfg)?;
                let failures = records.iter().filter(|r| r.is_hard_failure()).count();
                (suite::records_table(&records), failures)
            }
        };
        emit(&table, &cfg)?;
        if failures > 0 {
            return Err(CliError::Verification(failures));
        }
        Ok(())
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("i/o failure: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Verification(n)) => {
            eprintln!("{n} hard check(s) failed");
            ExitCode::from(3)
        }
    }
}
