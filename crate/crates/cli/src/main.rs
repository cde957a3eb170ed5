//! `iqft`: verification and computation runs with JSON/CSV reports.
//!
//! Exit status: 0 every check passed, 1 a check failed or a computation
//! rejected its data, 2 the run could not be set up (unreadable or invalid
//! config, missing referenced file, unwritable output directory).
//! Settings resolve as flags > config file > built-in defaults.

mod cmd;
mod io;

use clap::{Parser, Subcommand};
use io::Globals;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "iqft", version, about = "Verification runs for factorizing S-matrices, Fock spaces, deformations and nuclearity bounds")]
struct Cli {
    #[command(flatten)]
    globals: Globals,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Axiom residuals of an S-matrix.
    SmatrixCheck,
    /// Projectors, z†/z dual paths, ZF relations, number bounds, intertwining.
    FockVerify,
    /// Exhaustive contraction lemma checks.
    CombinatVerify,
    /// S_λ(θ), its axioms and ZF representation, two-particle elements.
    DeformScatter,
    /// Relative wedge-locality integral under quadrature refinement.
    Locality,
    /// q(s) sweep, s_min and kernel trace-norm report.
    Nuclearity,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.globals;
    let run = match cli.command {
        Command::SmatrixCheck => cmd::smatrix::run(g),
        Command::FockVerify => cmd::fock::run(g),
        Command::CombinatVerify => cmd::combinat::run(g),
        Command::DeformScatter => cmd::deform::run(g),
        Command::Locality => cmd::locality::run(g),
        Command::Nuclearity => cmd::nuclear::run(g),
    };
    match run {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed; see the report in {}", g.out.display());
            ExitCode::from(1)
        }
        Err(f) => {
            eprintln!("{}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
