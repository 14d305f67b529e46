//! File formats, generators, plots and the `peerpred` command line.
//!
//! Exit codes: 0 pass or feasible, 1 violated, refuted or infeasible,
//! 2 input error.

pub mod commands;
pub mod generators;
pub mod mechanism_file;
pub mod schema;
pub mod svg;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] peerpred_core::Error),
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Overrides the verifier's enumeration budget.
pub const TERM_BUDGET_ENV: &str = "PEERPRED_TERM_BUDGET";
/// Overrides the synthesis variable cap.
pub const MAX_VARIABLES_ENV: &str = "PEERPRED_MAX_VARIABLES";

/// Parses `argv` (including the program name), runs the command and returns
/// its exit code. Output goes to stdout, diagnostics to stderr.
pub fn run_command(argv: &[String]) -> i32 {
    let mut stdout = std::io::stdout().lock();
    run_command_to(argv, &mut stdout)
}

/// [`run_command`] writing its report to `out`.
pub fn run_command_to(argv: &[String], out: &mut dyn std::io::Write) -> i32 {
    use clap::Parser;
    let cli = match commands::Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match commands::run(cli, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("peerpred: {e}");
            EXIT_INPUT
        }
    }
}
