//! `nhph`: construct non-Hermitian parent Hamiltonians and reproduce their
//! observables, spectra and imaginary-time ground states.

mod commands;
mod error;
mod output;
mod pool;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{ConstructArgs, EdArgs, EdScalingArgs, ItebdArgs, SweepArgs};

#[derive(Parser)]
#[command(name = "nhph", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the local projector and check the existence criteria.
    Construct(ConstructArgs),
    /// Order parameters and string order over a μ grid.
    Sweep(SweepArgs),
    /// Full spectrum of a finite chain.
    Ed(EdArgs),
    /// Periodic-chain gaps and their extrapolation in 1/N.
    EdScaling(EdScalingArgs),
    /// Imaginary-time ground state of the infinite chain.
    Itebd(ItebdArgs),
}

fn main() -> ExitCode {
    // usage errors exit with 1 so that 2 keeps meaning "singular metric"
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Construct(a) => commands::construct(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Ed(a) => commands::ed(a),
        Command::EdScaling(a) => commands::ed_scaling(a),
        Command::Itebd(a) => commands::itebd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
