//! The `clocrc` command line.
//!
//! [`run`] parses arguments (merging an optional `--config` file under the
//! command-line flags), executes the subcommand and returns the process exit
//! code: 0 on success, 1 for usage and validation errors, 2 when a provider
//! failure aborted a run.

mod args;
mod commands;
pub mod config;
pub mod inputs;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::parser::ValueSource;
use clap::{ArgAction, CommandFactory, FromArgMatches, Parser};

use clocrc::experiments::ExperimentError;

pub use args::Cli;

/// Exit code for a run stopped by the provider.
pub const EXIT_ABORTED: i32 = 2;
pub const EXIT_INVALID: i32 = 1;

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut iter = args.iter().skip(1);
    while let Some(a) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return iter.next().map(PathBuf::from);
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

fn truthy(value: &str) -> Option<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" | "" => Some(false),
        _ => None,
    }
}

enum ParseFailure {
    Clap(clap::Error),
    Config(String),
}

/// Parses `args`, filling flags the command line left unset from the
/// config file.
fn parse(mut args: Vec<OsString>) -> Result<Cli, ParseFailure> {
    let Some(path) = config_path(&args) else {
        return Cli::try_parse_from(args).map_err(ParseFailure::Clap);
    };
    let entries = config::load_config(&path).map_err(|e| ParseFailure::Config(e.to_string()))?;

    let mut lenient = Cli::command().ignore_errors(true);
    lenient.build();
    let matches = lenient.clone().try_get_matches_from(&args).map_err(ParseFailure::Clap)?;
    let mut leaf_cmd = &lenient;
    let mut leaf = &matches;
    while let Some((name, sub)) = leaf.subcommand() {
        match leaf_cmd.find_subcommand(name) {
            Some(c) => leaf_cmd = c,
            None => break,
        }
        leaf = sub;
    }

    let mut extra: Vec<OsString> = Vec::new();
    for entry in entries {
        if entry.key == "config" {
            continue;
        }
        let Some(arg) = leaf_cmd.get_arguments().find(|a| a.get_long() == Some(entry.key.as_str())) else {
            eprintln!(
                "warning: config line {}: `{}` is not a flag of `{}`; ignored",
                entry.line,
                entry.key,
                leaf_cmd.get_name()
            );
            continue;
        };
        if leaf.value_source(arg.get_id().as_str()) == Some(ValueSource::CommandLine) {
            continue;
        }
        let flag = OsString::from(format!("--{}", entry.key));
        match arg.get_action() {
            ArgAction::SetTrue => match truthy(&entry.value) {
                Some(true) => extra.push(flag),
                Some(false) => {}
                None => {
                    return Err(ParseFailure::Config(format!(
                        "config line {}: `{}` expects true or false, got `{}`",
                        entry.line, entry.key, entry.value
                    )))
                }
            },
            _ => {
                extra.push(flag);
                extra.push(entry.value.into());
            }
        }
    }
    args.extend(extra);
    let matches = Cli::command().try_get_matches_from(args).map_err(ParseFailure::Clap)?;
    Cli::from_arg_matches(&matches).map_err(ParseFailure::Clap)
}

fn exit_code(err: &anyhow::Error) -> i32 {
    let aborted = err
        .chain()
        .any(|e| matches!(e.downcast_ref::<ExperimentError>(), Some(ExperimentError::Aborted { .. })));
    if aborted {
        EXIT_ABORTED
    } else {
        EXIT_INVALID
    }
}

/// Runs the command line and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match parse(args) {
        Ok(cli) => cli,
        Err(ParseFailure::Clap(e)) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { 0 };
        }
        Err(ParseFailure::Config(msg)) => {
            eprintln!("error: {msg}");
            return EXIT_INVALID;
        }
    };
    match commands::execute(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code(&err)
        }
    }
}
