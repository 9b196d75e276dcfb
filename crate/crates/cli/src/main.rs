//! `expandforge` command-line front end.

mod commands;
mod report;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use expandforge::Error;

/// Guided dataset expansion: toy data, expansion, training and reports.
#[derive(Debug, Parser)]
#[command(name = "expandforge", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded toy shapes dataset as a GIFX file.
    Toygen(commands::ToygenArgs),
    /// Expand a GIFX dataset and write the expanded file plus a manifest.
    Expand(commands::ExpandArgs),
    /// Train the pixel classifier on one dataset and evaluate on another.
    Traineval(commands::TrainevalArgs),
    /// Join metrics files into one CSV.
    Report(report::ReportArgs),
}

/// Failure of a subcommand, with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    /// Map a library error, prefixing `context` (usually a path or flag).
    pub fn from_error(context: &str, e: Error) -> Self {
        let code = match &e {
            Error::Divergence { .. } => 3,
            e if e.is_data_error() => 2,
            _ => 1,
        };
        let message = if context.is_empty() { e.to_string() } else { format!("{context}: {e}") };
        Failure { code, message }
    }
}

pub type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Toygen(a) => commands::toygen(a),
        Command::Expand(a) => commands::expand(a),
        Command::Traineval(a) => commands::traineval(a),
        Command::Report(a) => report::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
