use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fermat_plasticity::cli::{self, CliError, Command, Flags};

#[derive(Parser)]
#[command(name = "fermat", version, about = "Weighted Fermat-Torricelli networks: solve, invert, and sweep plasticity families")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Weighted Fermat-Torricelli point of a boundary configuration.
    Solve(Common),
    /// Weights that make a prescribed junction optimal.
    Inverse(Common),
    /// Inverse weights with a residual left at the junction.
    MixedInverse(Common),
    /// Five-point weights with a free fifth weight.
    PlasticityHexa(Common),
    /// Planar four-point weights with a free fourth weight.
    PlasticityQuad(Common),
    /// Candidate cosines and reconstructed rays from angles at the junction.
    Angles(Common),
    /// Cross-check the solver against the brute-force oracle.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// Input document (stdin when absent).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Solver tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Oracle seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Emit CSV rows over this many free-weight samples.
    #[arg(long)]
    sweep: Option<usize>,
    /// Attach the oracle gap to a solve.
    #[arg(long)]
    oracle: bool,
    /// Angles in the document are in degrees.
    #[arg(long)]
    degrees: bool,
}

fn fail(message: String) -> ExitCode {
    let e = CliError::Validation { message, pointer: None };
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::Solve(c) => (Command::Solve, c),
        Cmd::Inverse(c) => (Command::Inverse, c),
        Cmd::MixedInverse(c) => (Command::MixedInverse, c),
        Cmd::PlasticityHexa(c) => (Command::PlasticityHexa, c),
        Cmd::PlasticityQuad(c) => (Command::PlasticityQuad, c),
        Cmd::Angles(c) => (Command::Angles, c),
        Cmd::Verify(c) => (Command::Verify, c),
    };
    let mut text = String::new();
    let read = match &common.input {
        Some(path) => std::fs::read_to_string(path).map(|s| text = s),
        None => std::io::stdin().read_to_string(&mut text).map(|_| ()),
    };
    if let Err(e) = read {
        return fail(format!("cannot read input: {e}"));
    }
    let flags = Flags {
        tol: common.tol,
        seed: common.seed,
        sweep: common.sweep,
        oracle: common.oracle,
        degrees: common.degrees,
    };
    let outcome = cli::run_text(command, &flags, &text);
    if outcome.code != 0 {
        eprint!("{}", outcome.stderr);
        return ExitCode::from(outcome.code as u8);
    }
    let written = match &common.output {
        Some(path) => std::fs::write(path, &outcome.stdout),
        None => std::io::stdout().write_all(outcome.stdout.as_bytes()),
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(format!("cannot write output: {e}")),
    }
}
