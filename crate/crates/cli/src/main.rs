//! Scriptable front end: distribution tables, point evaluation, root
//! inspection, the verification suite, and seeded simulation.
//!
//! Exit codes: 0 success, 1 comparison failure (verify / --method both),
//! 2 structural assumption violation, 3 numerical degeneracy, 64 usage.

use clap::error::ErrorKind;
use clap::Parser;

mod dist;
mod eval;
mod flags;
mod roots;
mod simulate;
mod source;
mod verify_cmd;

#[derive(Parser, Debug)]
#[command(
    name = "sojourn",
    version,
    about = "Joint laws of landing counts for Markov chains",
    after_help = "Exit codes: 0 success, 1 comparison failure (verify, dist --method both), \
                  2 structural assumption violation, 3 numerical degeneracy, 64 usage."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Subcommand, Debug)]
enum Cmd {
    /// Joint distribution table of (count, landing position)
    Dist(dist::DistArgs),
    /// Kernel values at a numeric point
    Eval(eval::EvalArgs),
    /// Characteristic-polynomial roots for a walk
    Roots(roots::RootsArgs),
    /// Run the verification suite
    Verify(verify_cmd::VerifyArgs),
    /// Seeded path simulation
    Simulate(simulate::SimulateArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let outcome = match &cli.cmd {
        Cmd::Dist(args) => dist::run(args),
        Cmd::Eval(args) => eval::run(args),
        Cmd::Roots(args) => roots::run(args),
        Cmd::Verify(args) => verify_cmd::run(args),
        Cmd::Simulate(args) => simulate::run(args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}
