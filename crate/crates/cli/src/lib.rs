//! Library half of the `flowlens` binary: argument definitions, config-file
//! expansion and the subcommands.

pub mod args;
pub mod commands;
pub mod config;

use std::ffi::OsString;

use clap::{CommandFactory, FromArgMatches};
use flowlens::Error;

pub use args::{Cli, Command};

/// Process exit status for an error: 2 bad input or parameters, 3 model and
/// data disagree on the schema, 1 anything else.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Fold { source, .. } => exit_code(source),
        Error::FingerprintMismatch { .. } => 3,
        Error::Diverged { .. } | Error::SingularSystem => 1,
        Error::Pcap(_)
        | Error::Io(_)
        | Error::Csv(_)
        | Error::Json(_)
        | Error::Schema(_)
        | Error::InvalidInput(_)
        | Error::InvalidParam(_)
        | Error::WidthMismatch { .. }
        | Error::SingleClass
        | Error::Empty(_)
        | Error::TooManyFeatures { .. }
        | Error::BudgetTooSmall { .. }
        | Error::Unsupported(_) => 2,
    }
}

/// Parses `argv`, applying `--config` when present. Clap errors (including
/// `--help`) are returned as such so the caller can print them.
pub fn parse(argv: Vec<OsString>) -> Result<Cli, ParseError> {
    let cmd = Cli::command();
    let first = Cli::from_arg_matches(&cmd.clone().try_get_matches_from(&argv)?)?;
    let Some(path) = &first.config else {
        return Ok(first);
    };
    let entries = config::load_config(path)?;
    let expanded = config::expand_args(&cmd, &argv, first.command.name(), &entries)?;
    Ok(Cli::from_arg_matches(&cmd.try_get_matches_from(expanded)?)?)
}

#[derive(Debug)]
pub enum ParseError {
    Clap(clap::Error),
    Config(Error),
}

impl From<clap::Error> for ParseError {
    fn from(e: clap::Error) -> Self {
        ParseError::Clap(e)
    }
}

impl From<Error> for ParseError {
    fn from(e: Error) -> Self {
        ParseError::Config(e)
    }
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> flowlens::Result<()> {
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    commands::run(&cli.command, cli.seed)
}
