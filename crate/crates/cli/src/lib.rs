//! Command-line front end: parses arguments, loads the instance config, runs
//! one command, and writes result.json (plus CSVs for sweeps) atomically.
//!
//! Exit codes: 0 success, 2 config error, 3 numerical non-convergence,
//! 4 enumeration cap exceeded.

pub mod commands;
pub mod config;
pub mod report;

use clap::{Args, Parser, Subcommand};
use commands::SimMode;
use config::{load_instance, Instance};
use report::{write_document, Base, Body, ResultDocument, ToolInfo};
use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or syntactically invalid config file.
    ConfigParse(String),
    /// Config parsed but failed validation; message names the field.
    ConfigInvalid(String),
    Compute(jscc::Error),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::ConfigParse(msg) => write!(f, "config parse: {msg}"),
            CliError::ConfigInvalid(msg) => write!(f, "config invalid: {msg}"),
            CliError::Compute(e) => write!(f, "compute: {e}"),
            CliError::Io(msg) => write!(f, "io: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<jscc::Error> for CliError {
    fn from(e: jscc::Error) -> Self {
        CliError::Compute(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigParse(_) | CliError::ConfigInvalid(_) => 2,
            CliError::Compute(jscc::Error::NoConvergence { .. }) => 3,
            CliError::Compute(jscc::Error::EnumerationCapExceeded { .. }) => 4,
            // Parameter problems discovered mid-computation are still config
            // problems from the caller's point of view.
            CliError::Compute(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Args)]
struct Common {
    /// Instance description (JSON)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Directory receiving result.json and any CSV files
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Display base for entropies, rates, and exponents
    #[arg(long, value_enum, default_value_t = Base::Bits)]
    base: Base,
}

#[derive(Debug, Parser)]
#[command(
    name = "jscc",
    version,
    about = "Joint source-channel error exponents and finite-blocklength bounds"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the exponent family of an instance
    Exponent {
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate exponent curves over rho into CSV files
    SweepRho {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate the finite-blocklength random-coding bound
    Bound {
        #[command(flatten)]
        common: Common,
        /// Source block length
        #[arg(long)]
        k: usize,
        /// Channel block length
        #[arg(long)]
        n: usize,
        /// Partition threshold override; derived from the best-pair
        /// construction when absent
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Enumerate or simulate the random-coding ensemble
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Source block length
        #[arg(long)]
        k: usize,
        /// Channel block length
        #[arg(long)]
        n: usize,
        /// Partition threshold override; derived from the best-pair
        /// construction when absent
        #[arg(long)]
        gamma: Option<f64>,
        /// Exhaustive enumeration or Monte Carlo
        #[arg(long, value_enum, default_value_t = SimMode::Mc)]
        mode: SimMode,
        /// Monte Carlo trial count
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Monte Carlo seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Report the threshold partition of length-k source blocks
    Partition {
        #[command(flatten)]
        common: Common,
        /// Source block length
        #[arg(long)]
        k: usize,
        /// Partition threshold override; derived from the best-pair
        /// construction when absent
        #[arg(long)]
        gamma: Option<f64>,
    },
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let start = Instant::now();
    match cli.command {
        Command::Exponent { common } => {
            let instance = load_instance(&common.config)?;
            let body = Body::Exponent(commands::cmd_exponent(&instance, common.base)?);
            finish(&common, "exponent", instance, body, start)
        }
        Command::SweepRho { common } => {
            let instance = load_instance(&common.config)?;
            let (section, files) = commands::cmd_sweep_rho(&instance, common.base, &common.out)?;
            for f in &files {
                println!("wrote {}", f.display());
            }
            finish(&common, "sweep-rho", instance, Body::Sweep(section), start)
        }
        Command::Bound {
            common,
            k,
            n,
            gamma,
        } => {
            let instance = load_instance(&common.config)?;
            let body = Body::Bound(commands::cmd_bound(&instance, common.base, k, n, gamma)?);
            finish(&common, "bound", instance, body, start)
        }
        Command::Simulate {
            common,
            k,
            n,
            gamma,
            mode,
            trials,
            seed,
        } => {
            let instance = load_instance(&common.config)?;
            let body = Body::Simulate(commands::cmd_simulate(
                &instance,
                common.base,
                k,
                n,
                gamma,
                mode,
                trials,
                seed,
            )?);
            finish(&common, "simulate", instance, body, start)
        }
        Command::Partition { common, k, gamma } => {
            let instance = load_instance(&common.config)?;
            let body = Body::Partition(commands::cmd_partition(&instance, common.base, k, gamma)?);
            finish(&common, "partition", instance, body, start)
        }
    }
}

fn finish(
    common: &Common,
    name: &str,
    instance: Instance,
    body: Body,
    start: Instant,
) -> Result<(), CliError> {
    let doc = ResultDocument {
        schema_version: config::SCHEMA_VERSION,
        tool: ToolInfo::current(),
        command: name.into(),
        base: common.base,
        config: instance.echo,
        body,
        elapsed_ms: start.elapsed().as_millis() as u64,
    };
    let path = write_document(&common.out, &doc)?;
    println!("wrote {}", path.display());
    Ok(())
}
