//! `nonstretch`: measurement construction, criteria evaluation, thresholds
//! and partition bounds from the command line.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use config::{load_config, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "nonstretch", version, about = "k-nonstretchability criteria from symmetric measurements")]
struct Cli {
    /// JSON run config (or a previous output file); its fields override flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build and certify an (s,t) measurement from the Gell-Mann basis.
    Povm(RunConfig),
    /// Evaluate both criteria on a state family.
    Criteria(RunConfig),
    /// Detection thresholds in the mixing weight p.
    Threshold(RunConfig),
    /// k-stretchable partitions, the closed-form bracket and the bounds.
    Partitions(RunConfig),
    /// Random k-stretchable states checked for false violations.
    Sweep(RunConfig),
}

impl Command {
    fn split(self) -> (&'static str, RunConfig) {
        match self {
            Command::Povm(c) => ("povm", c),
            Command::Criteria(c) => ("criteria", c),
            Command::Threshold(c) => ("threshold", c),
            Command::Partitions(c) => ("partitions", c),
            Command::Sweep(c) => ("sweep", c),
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let (name, flags) = cli.command.split();
    let mut cfg = match &cli.config {
        Some(path) => {
            let file = load_config(path)?;
            if let Some(other) = file.command.as_deref().filter(|c| *c != name) {
                bail!("config is for `{other}`, not `{name}`");
            }
            flags.overlay(file)?
        }
        None => flags,
    };
    cfg.command = Some(name.to_string());
    let report = match name {
        "povm" => commands::povm(&cfg)?,
        "criteria" => commands::criteria(&cfg)?,
        "threshold" => commands::threshold(&cfg)?,
        "partitions" => commands::partitions(&cfg)?,
        _ => commands::sweep(&cfg)?,
    };
    report.emit(&cfg)?;
    Ok(report.ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
