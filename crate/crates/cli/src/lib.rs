//! Command-line surface for the `infoacq` model.
//!
//! Exit codes: 0 success, 1 computation or verification failure, 2 usage.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod output;
pub mod svg;

use std::ffi::OsString;

pub use args::{parse_cli, Axis, Command, Format, Options, RunConfig};
pub use commands::{execute, CommandOutput};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] infoacq::ModelError),
    #[error("verification failed: {0}")]
    Check(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Model(e) => e.kind(),
            CliError::Check(_) => "check_failed",
            CliError::Io(_) => "io",
            CliError::Csv(_) => "csv",
            CliError::Json(_) => "json",
        }
    }

    /// `{"error": {"kind": ..., "message": ...}}`
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": { "kind": self.kind(), "message": self.to_string() } }).to_string()
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cfg = match parse_cli(argv) {
        Ok(cfg) => cfg,
        Err(args::ParseOutcome::Clap(e)) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
        Err(args::ParseOutcome::Invalid(e)) => {
            eprintln!("{}", e.to_json());
            return e.exit_code();
        }
    };
    match execute(&cfg) {
        Ok(out) => {
            if let Some(text) = out.stdout {
                print!("{text}");
            }
            if let Some(err) = out.failure {
                eprintln!("{}", err.to_json());
                return err.exit_code();
            }
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
