//! `corteml` command-line front end.
//!
//! Exit codes: 0 success, 1 computational failure (degenerate data, too few
//! subjects), 2 bad input (I/O, file schema, arguments or config).

mod args;
mod commands;
mod render;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use args::{Cli, Command, ConfigError};
use corteml::Execution;

fn run(cli: Cli) -> Result<()> {
    let mut command = cli.command;
    if let Some(path) = &cli.config {
        command.merge(args::load_config(path)?);
    }
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match command {
        Command::Synth(a) => commands::synth(a, exec),
        Command::Extract(a) => commands::extract(a, exec),
        Command::Select(a) => commands::select(a, exec),
        Command::Regress(a) => commands::regress(a, exec),
        Command::Classify(a) => commands::classify(a, exec),
        Command::Report(a) => {
            let input = a.input.ok_or_else(|| ConfigError("missing input file".into()))?;
            let precision = a.precision.unwrap_or(3);
            let text = std::fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let out = if input.extension().is_some_and(|e| e == "model") {
                render::model_report(&text, precision)
                    .with_context(|| format!("reading {}", input.display()))?
            } else {
                render::csv_report(&text, &input, precision)?
            };
            print!("{out}");
            Ok(())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<corteml::Error>() {
            let usage = matches!(e.root(), corteml::Error::InvalidArgument(_));
            return if e.is_io() || usage { 2 } else { 1 };
        }
        if cause.is::<ConfigError>() || cause.is::<std::io::Error>() || cause.is::<csv::Error>() {
            return 2;
        }
    }
    1
}

/// The error chain joined by colons. Core errors already print their
/// source, so a cause the message ends with is not repeated.
fn describe(err: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in err.chain() {
        let s = cause.to_string();
        if !msg.ends_with(&s) {
            if !msg.is_empty() {
                msg.push_str(": ");
            }
            msg.push_str(&s);
        }
    }
    msg
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", describe(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}
