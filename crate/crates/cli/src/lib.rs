//! Command-line driver: parses flags and an optional TOML config, runs one
//! computation on a worker pool and writes CSV tables with JSON sidecars.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use thiserror::Error;

use config::{Cli, Command, FileConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Clap(#[from] clap::Error),

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Engine(#[from] triwell::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn is_bad_input(e: &triwell::Error) -> bool {
    match e {
        triwell::Error::InvalidArgument(_) => true,
        triwell::Error::AtGridPoint { source, .. } => is_bad_input(source),
        _ => false,
    }
}

impl CliError {
    /// 0 for `--help`/`--version`, 2 for usage errors, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Clap(e) => e.exit_code() as u8,
            CliError::Usage(_) => 2,
            CliError::Engine(e) if is_bad_input(e) => 2,
            CliError::Engine(_) => 3,
            _ => 1,
        }
    }
}

/// Parses `args` (program name first) and executes the command.
/// Returns the written paths.
pub fn run<I, T>(args: I) -> Result<Vec<PathBuf>, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    execute(Cli::try_parse_from(args)?)
}

pub fn execute(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let workers = cli.workers.or(file.workers).unwrap_or(0);
    if cli.workers == Some(0) {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| file.out_dir.clone())
        .unwrap_or_else(|| Path::new("out").to_path_buf());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    let start = Instant::now();
    let run = pool.install(|| match &cli.command {
        Command::Spectrum(a) => commands::spectrum(a, &file),
        Command::PurityScan(a) => commands::purity_scan_cmd(a, &file),
        Command::Scaling(a) => commands::scaling(a, &file),
        Command::Fields(a) => commands::fields(a, &file),
        Command::FixedPoints(a) => commands::fixed_points(a, &file),
        Command::Trajectory(a) => commands::trajectory(a, &file),
        Command::ThetaMin(a) => commands::theta_min(a, &file),
    })?;
    output::write_run(&run, &out_dir, start.elapsed(), pool.current_num_threads())
}
