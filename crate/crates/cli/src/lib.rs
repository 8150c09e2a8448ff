//! Front end for the `orbita` binary: problem files, command dispatch, and
//! text/JSON reports.

pub mod commands;
pub mod problem;

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

pub use commands::{run, CliError, Command, Options, Report, Session};
pub use problem::{ParseError, Problem};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CommandArg {
    Invariants,
    Coframe,
    Syzygies,
    Conslaws,
    El,
    Reconstruct,
    Verify,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Command {
        match c {
            CommandArg::Invariants => Command::Invariants,
            CommandArg::Coframe => Command::Coframe,
            CommandArg::Syzygies => Command::Syzygies,
            CommandArg::Conslaws => Command::Conslaws,
            CommandArg::El => Command::El,
            CommandArg::Reconstruct => Command::Reconstruct,
            CommandArg::Verify => Command::Verify,
        }
    }
}

/// Symmetry reduction of jet-space differential systems.
#[derive(Debug, Parser)]
#[command(name = "orbita", version)]
pub struct Cli {
    #[arg(value_enum)]
    command: CommandArg,
    /// Problem file (.orb)
    problem: PathBuf,
    /// Also write the report as JSON to this path
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Seed for randomized identity tests
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Sample points per randomized certificate
    #[arg(long, default_value_t = 8)]
    samples: usize,
    /// Lagrangian in reduced coordinates, for `el`
    #[arg(long)]
    lagrangian: Option<String>,
    /// CSV destination for `reconstruct` (stdout otherwise)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

/// Outcome of one invocation: exit code plus what goes to stdout and stderr.
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn execute(cli: &Cli) -> Outcome {
    let opts = Options { seed: cli.seed, samples: cli.samples.max(1), lagrangian: cli.lagrangian.clone(), out: cli.out.clone() };
    match run_file(cli.command.into(), &cli.problem, &opts) {
        Err(e) => Outcome { code: e.exit_code(), stdout: String::new(), stderr: format!("error: {e}\n") },
        Ok(report) => {
            let mut stderr = String::new();
            if let Some(path) = &cli.json {
                let body = serde_json::to_string_pretty(&report.json).expect("json values serialize");
                if let Err(e) = std::fs::write(path, body + "\n") {
                    return Outcome { code: 1, stdout: report.text, stderr: format!("error: {}: {e}\n", path.display()) };
                }
            }
            if !report.ok {
                stderr.push_str("error: verification failed\n");
            }
            Outcome { code: if report.ok { 0 } else { 1 }, stdout: report.text, stderr }
        }
    }
}

pub fn run_file(command: Command, path: &Path, opts: &Options) -> Result<Report, CliError> {
    let problem = Problem::load(path)?;
    run(command, &problem, opts)
}
