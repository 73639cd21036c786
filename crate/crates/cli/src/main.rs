//! `qverify`: planners, simulated runs, exact oracles and figure datasets.
//!
//! Exit status: 0 on success (or a passing run), 2 when a simulated run is
//! inconclusive, 1 on any usage or validation error. Errors are printed as a
//! single line `error: <code>: <message>`.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use commands::ProtocolArg;
use config::Params;

#[derive(Debug, Parser)]
#[command(
    name = "qverify",
    version,
    about = "Device-independent state verification and certification"
)]
struct Cli {
    /// JSON file with default values for any flag (flags take precedence).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    params: Params,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the bound report for one parameter choice.
    Bound,
    /// Plan a verification run.
    PlanVerify,
    /// Plan a certification run.
    PlanCertify,
    /// Simulate verification against a source.
    Verify,
    /// Simulate certification against a source.
    Certify,
    /// Exact pass probability of a source next to the planned bound.
    Oracle {
        #[arg(long, value_enum, default_value_t)]
        protocol: ProtocolArg,
    },
    /// Write a figure dataset (`fig2a`, `fig2b`, `fig3`) into --out.
    Figure { id: String },
}

/// A one-line, machine-parseable failure.
#[derive(Debug)]
pub struct Failure {
    code: String,
    message: String,
}

impl Failure {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.into(),
            message: message.into(),
        }
    }
}

impl From<qverify_core::Error> for Failure {
    fn from(e: qverify_core::Error) -> Self {
        Failure::new(e.code(), e.to_string())
    }
}

fn dispatch(cli: Cli) -> Result<u8, Failure> {
    let params = match &cli.config {
        Some(path) => cli.params.over(Params::from_file(path)?),
        None => cli.params,
    };
    match cli.command {
        Command::Bound => commands::bound(&params),
        Command::PlanVerify => commands::plan(&params, ProtocolArg::Verification),
        Command::PlanCertify => commands::plan(&params, ProtocolArg::Certification),
        Command::Verify => commands::run(&params, ProtocolArg::Verification),
        Command::Certify => commands::run(&params, ProtocolArg::Certification),
        Command::Oracle { protocol } => commands::oracle(&params, protocol),
        Command::Figure { id } => commands::figure(&params, &id),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            return ExitCode::from(if ok { 0 } else { 1 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}: {}", f.code, f.message.replace('\n', " "));
            ExitCode::from(1)
        }
    }
}
