//! Command-line front end: parses flags and a TOML experiment file, runs one command
//! and writes its report.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::RunContext;
use config::{ExperimentConfig, Format, DEFAULT_REPLICATES, DEFAULT_SEED};
use error::{CliError, ExitKind};
use report::Report;

pub const THREADS_ENV: &str = "ORTHOFIELD_THREADS";
const DEFAULT_OUT: &str = "orthofield-report";

#[derive(Debug, Parser)]
#[command(name = "orthofield", version, about = "Exact and Monte Carlo checks for stationary random fields on Z^d")]
pub struct Cli {
    /// Experiment file (TOML)
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// csv or json
    #[arg(long, global = true, value_name = "FORMAT")]
    pub format: Option<String>,
    /// Overrides the configured replicate count
    #[arg(long, global = true, value_name = "N")]
    pub replicates: Option<u64>,
    /// Worker threads; affects speed only
    #[arg(long, global = true, value_name = "K")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Window, dependence coefficients, sigma^2 and the martingale kernel table
    Describe,
    /// Orthomartingale-coboundary decomposition with verification
    Decompose {
        /// Order M of the centering box [-M, M]^d
        #[arg(long)]
        m: Option<i32>,
        /// Center the functional in [-M, M]^d first
        #[arg(long)]
        auto_center: bool,
    },
    /// Monte Carlo checks of the Gaussian limit
    VerifyClt,
    /// Hannan versus physical dependence for the truncated construction
    Counterexample,
    /// Exact identity suites on seeded random functionals
    Selftest {
        /// Replace every suite tolerance (negative control)
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if let Some(k) = flag {
        return if k == 0 { Err(CliError::config("--threads: must be positive")) } else { Ok(Some(k)) };
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(CliError::config(format!("{THREADS_ENV}: expected a positive integer, got \"{v}\""))),
        },
        Err(_) => Ok(None),
    }
}

/// Loads the configuration, runs the command and returns the report with its output settings.
pub fn execute(cli: &Cli) -> Result<(Report, PathBuf, Format), CliError> {
    let (cfg, bytes) = match &cli.config {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| CliError::config(format!("--config {}: {e}", path.display())))?;
            let text = std::str::from_utf8(&bytes).map_err(|_| CliError::config("config: not valid UTF-8"))?;
            (Some(ExperimentConfig::from_toml(text)?), bytes)
        }
        None => (None, Vec::new()),
    };
    let seed = cli.seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(DEFAULT_SEED);
    let replicates = cli.replicates.or(cfg.as_ref().map(|c| c.replicates)).unwrap_or(DEFAULT_REPLICATES);
    let format_name = cli.format.clone().or_else(|| cfg.as_ref().and_then(|c| c.output.format.clone())).unwrap_or_else(|| "csv".into());
    let format = Format::parse(&format_name)?;
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.as_ref().and_then(|c| c.output.dir.clone()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let ctx = RunContext { config_bytes: bytes, seed, replicates };
    let need = |cfg: &Option<ExperimentConfig>| cfg.clone().ok_or_else(|| CliError::config("--config is required for this command"));

    let run = || -> Result<Report, CliError> {
        match &cli.command {
            Command::Describe => commands::describe(&need(&cfg)?, &ctx),
            Command::Decompose { m, auto_center } => commands::decompose(&need(&cfg)?, &ctx, *m, *auto_center),
            Command::VerifyClt => commands::verify_clt(&need(&cfg)?, &ctx),
            Command::Counterexample => commands::counterexample_report(cfg.as_ref(), &ctx),
            Command::Selftest { tolerance } => commands::selftest(&ctx, *tolerance),
        }
    };
    let report = match thread_count(cli.threads)? {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::config(format!("--threads: {e}")))?
            .install(run)?,
        None => run()?,
    };
    Ok((report, out, format))
}

pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitKind::InvalidConfig.into() } else { ExitCode::SUCCESS };
        }
    };
    let result = execute(&cli).and_then(|(report, out, format)| {
        let files = report.write(&out, format)?;
        Ok((report, files))
    });
    match result {
        Ok((report, files)) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            if report.failed {
                eprintln!("acceptance checks failed; see the report");
                ExitKind::StatisticalFailure.into()
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.kind.into()
        }
    }
}
