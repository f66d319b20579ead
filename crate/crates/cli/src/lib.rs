//! Command-line front end: loads a TOML run configuration, applies flag
//! overrides, runs one experiment and writes a CSV.

pub mod config;
pub mod csv;

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dare_core::sim::{self, CurvePoint, DetectorKind, SimConfig};

pub use config::FileConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {origin}: {message}")]
    Config { origin: String, message: String },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] dare_core::Error),
}

#[derive(Debug, Parser)]
#[command(
    name = "dare",
    version,
    about = "Link-level MU-MIMO detection experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Uncoded bit error rate per SNR point.
    Ber(RunArgs),
    /// Coded throughput, 1 - FER, per SNR point.
    Throughput(RunArgs),
    /// Sign agreement and clamped error of soft outputs against the exact max-log LLRs.
    Llr(RunArgs),
    /// Real-multiplication counts of the tree detector against the worst-case formula.
    Complexity(RunArgs),
    /// Exclusion probability bound and the empirical exclusion rate.
    Bound(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML configuration file.
    #[arg(short, long)]
    pub config: PathBuf,
    /// SNR grid in dB, comma separated; replaces `snr_db`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub snr: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Candidate list size of the tree detector.
    #[arg(long)]
    pub nc: Option<usize>,
    /// dare, lmmse, mmse_sic, ml or maxlog.
    #[arg(long)]
    pub detector: Option<String>,
    /// Output file; stdout when absent.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ber(_) => "ber",
            Command::Throughput(_) => "throughput",
            Command::Llr(_) => "llr",
            Command::Complexity(_) => "complexity",
            Command::Bound(_) => "bound",
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Ber(a)
            | Command::Throughput(a)
            | Command::Llr(a)
            | Command::Complexity(a)
            | Command::Bound(a) => a,
        }
    }
}

impl RunArgs {
    /// Loads the file and applies the flag overrides.
    pub fn resolve(&self) -> Result<SimConfig, CliError> {
        let mut cfg = FileConfig::load(&self.config)?.to_sim()?;
        if let Some(snr) = &self.snr {
            cfg.snr_grid_db = snr.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(nc) = self.nc {
            cfg.dare.n_c = nc;
        }
        if let Some(name) = &self.detector {
            cfg.detector = DetectorKind::parse(name)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs one subcommand on a resolved configuration and returns the rows.
pub fn execute(command: &str, cfg: &SimConfig) -> Result<Vec<CurvePoint>, CliError> {
    Ok(match command {
        "ber" => sim::run_ber(cfg)?,
        "throughput" => sim::run_throughput(cfg)?,
        "llr" => sim::run_llr_fidelity(cfg)?
            .iter()
            .flat_map(|p| p.rows())
            .collect(),
        "complexity" => sim::run_complexity(cfg)?
            .iter()
            .flat_map(|p| p.rows())
            .collect(),
        "bound" => sim::run_exclusion(cfg)?
            .iter()
            .flat_map(|p| p.rows())
            .collect(),
        other => {
            return Err(CliError::Config {
                origin: "command line".into(),
                message: format!("unknown subcommand {other:?}"),
            })
        }
    })
}

/// Full CSV text of a run.
pub fn run_to_string(command: &str, cfg: &SimConfig) -> Result<String, CliError> {
    let header = csv::header(command, cfg)?;
    let rows = execute(command, cfg)?;
    Ok(csv::render(&header, &rows))
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let args = cli.command.args();
    let cfg = args.resolve()?;
    // open the output before a possibly long run
    let out = match &args.out {
        Some(path) => Some((
            path,
            File::create(path).map_err(|source| CliError::Write {
                path: path.clone(),
                source,
            })?,
        )),
        None => None,
    };
    let text = run_to_string(cli.command.name(), &cfg)?;
    match out {
        Some((path, mut file)) => {
            file.write_all(text.as_bytes())
                .map_err(|source| CliError::Write {
                    path: path.clone(),
                    source,
                })
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
