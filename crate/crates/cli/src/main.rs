//! `helichain`: runs one experiment per invocation and writes its CSV, JSON
//! and plot data under the output directory.

mod config;
mod run;

use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use config::{resolve, Command, Flags};

/// Exit status for malformed invocations (sysexits EX_USAGE).
const USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(name = "helichain", version, about = "Frustrated F-AF spin chain laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// E, H and (with --delta) E^hf, H^hf of a seeded random chain
    Energy(Flags),
    /// Helical or ferromagnetic ground state against the closed-form minimum
    GroundState(Flags),
    /// Unclamped descent of H^hf from a seeded random start
    Minimize(Flags),
    /// Chirality transition forced by clamped ends
    Transition(Flags),
    /// Transitions over every (lambda, delta) and (lambda, l) pair
    Sweep(Flags),
    /// Cell-problem estimates of the bulk density along |z| in [0, 1]
    Fhom(Flags),
    /// Modica-Mortola constant and recovery-sequence energy
    MmCheck(Flags),
    /// Brute-force grid minimum of E on a tiny chain
    Oracle(Flags),
    /// Exact identities and symmetries on seeded random configurations
    Identities(Flags),
}

impl Sub {
    fn split(self) -> (Command, Flags) {
        match self {
            Sub::Energy(f) => (Command::Energy, f),
            Sub::GroundState(f) => (Command::GroundState, f),
            Sub::Minimize(f) => (Command::Minimize, f),
            Sub::Transition(f) => (Command::Transition, f),
            Sub::Sweep(f) => (Command::Sweep, f),
            Sub::Fhom(f) => (Command::Fhom, f),
            Sub::MmCheck(f) => (Command::MmCheck, f),
            Sub::Oracle(f) => (Command::Oracle, f),
            Sub::Identities(f) => (Command::Identities, f),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(USAGE);
        }
        // --help and --version
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let (command, flags) = cli.command.split();
    let env_out = std::env::var_os("HELICHAIN_OUT").map(Into::into);
    let run = match resolve(command, flags, env_out) {
        Ok(run) => run,
        Err(e) => {
            eprintln!(
                "error: {e}\n\nFor more information, try 'helichain {} --help'.",
                command.name()
            );
            return ExitCode::from(USAGE);
        }
    };

    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();
    let mut out = match run::Output::new(&run) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(run::exit_code(&e));
        }
    };
    let result = run::execute(command, &run, &mut out);
    let (code, outcome) = match &result {
        Ok(s) if s.failed => (2, format!("failed: {}", s.line)),
        Ok(s) => (0, format!("ok: {}", s.line)),
        Err(e) => (run::exit_code(e), format!("error: {e}")),
    };
    if let Err(e) = out.log(started, clock.elapsed().as_secs_f64(), &outcome) {
        eprintln!("warning: could not write log: {e}");
    }
    match result {
        Ok(s) => {
            println!("{} [{}]: {}", command.name(), &out.hash()[..12], s.line);
            for p in &out.written {
                println!("  {}", p.display());
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(code)
}
