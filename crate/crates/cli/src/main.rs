//! `thermoform` experiment runner.
//!
//! Exit codes: 0 success, 1 invalid configuration, 2 numerical failure,
//! 3 hypothesis check failed.

// `!(x > 0)` style guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Settings;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn validation(field: &str, reason: impl std::fmt::Display) -> Self {
        CliError::Validation(format!("invalid `{field}`: {reason}"))
    }

    pub fn io(e: impl std::fmt::Display) -> Self {
        CliError::Io(e.to_string())
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) | CliError::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<thermoform::Error> for CliError {
    fn from(e: thermoform::Error) -> Self {
        match e {
            thermoform::Error::InvalidParameter { .. } => CliError::Validation(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "thermoform",
    version,
    about = "Pressure, specification and Bowen-property experiments"
)]
struct Cli {
    /// JSON configuration; command-line flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pressure tables for the full, good and bad collections
    Pressure(Settings),
    /// Classification census of random segments
    Decompose(Settings),
    /// Glue random good segments and verify the shadowing
    Glue(Settings),
    /// Leading eigendata of the discretized transfer operator
    Transfer(Settings),
    /// Bowen bound against sampled variation on the natural extension
    Extension(Settings),
    /// Solenoid attractor checks
    Solenoid(Settings),
    /// Full pressure against bad-collection pressure
    GapReport(Settings),
    /// Combined specification, Bowen and pressure-gap check
    Check(Settings),
}

impl Command {
    fn split(self) -> (&'static str, Settings) {
        match self {
            Command::Pressure(s) => ("pressure", s),
            Command::Decompose(s) => ("decompose", s),
            Command::Glue(s) => ("glue", s),
            Command::Transfer(s) => ("transfer", s),
            Command::Extension(s) => ("extension", s),
            Command::Solenoid(s) => ("solenoid", s),
            Command::GapReport(s) => ("gap-report", s),
            Command::Check(s) => ("check", s),
        }
    }
}

fn execute(cli: Cli) -> Result<u8, CliError> {
    let (name, flags) = cli.command.split();
    let base = match &cli.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    let cfg = base.overlay(flags).resolve(name)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::validation("workers", e))?;
    let outcome = pool.install(|| run::run(&cfg))?;
    let hash = cfg.hash();
    output::emit(cfg.output.as_deref(), &outcome.table.render(&hash, cfg.seed)?)?;
    if let (Some(path), Some(doc)) = (&cfg.json, &outcome.json) {
        output::emit(Some(path), &output::json_bytes(doc, &hash, cfg.seed)?)?;
    }
    if let (Some(path), Some(cloud)) = (&cfg.cloud, &outcome.cloud) {
        output::emit(Some(path), &cloud.render(&hash, cfg.seed)?)?;
    }
    Ok(outcome.status as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
