//! `hdcca` command-line tool.
//!
//! Exit codes: 0 on success or when a test fails to reject, 3 when a test
//! rejects, 2 on any input or runtime error. Errors are printed to stderr as
//! a JSON object `{schema, code, message}`.

mod args;
mod commands;
mod error;
mod io;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use hdcca::Decision;

use crate::error::CliError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 2;
pub const EXIT_REJECT: u8 = 3;

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(EXIT_ERROR)
}

fn main() -> ExitCode {
    let cli = match args::Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) => {
            e.exit()
        }
        Err(e) => return fail(&CliError::Usage(e.to_string().trim_end().to_string())),
    };
    match commands::run(cli) {
        Ok(Some(Decision::Reject)) => ExitCode::from(EXIT_REJECT),
        Ok(_) => ExitCode::from(EXIT_OK),
        Err(e) => fail(&e),
    }
}
