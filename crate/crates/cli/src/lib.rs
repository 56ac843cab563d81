//! Command-line experiment runner for `risprop`.
//!
//! Every command reads one TOML [`ExperimentConfig`], applies flag overrides,
//! and writes CSV files whose leading `#` lines carry the resolved
//! configuration. Exit codes: 0 success, 2 configuration error, 3 numeric or
//! validation failure.

pub mod commands;
pub mod config;
pub mod output;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use risprop::experiments::SweepAxis;

pub use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] risprop::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use risprop::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Core(E::Parameter { .. } | E::Topology(_) | E::Degenerate { .. }) => 2,
            CliError::Core(_) => 3,
            CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "risprop", version, about = "Interference propagation experiments for multi-RIS downlinks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML experiment configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo trials.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "RIS_SIM_THREADS")]
    pub threads: Option<usize>,
    /// Write manifest.json with seed, config hash and version.
    #[arg(long, global = true)]
    pub manifest: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Sample one network and export its points.
    Topology,
    /// Empirical against gamma-fitted CDF of the serving power.
    ValidatePower,
    /// Outage before and after movement over transmit power.
    OutageSweep,
    /// Agent-based SIS ensembles for every density and initial split.
    SisSim,
    /// Propagation intensity along one axis.
    R0Sweep {
        /// ue_density | bs_density | frequency | ris_elements
        #[arg(long)]
        axis: Option<SweepAxis>,
        /// bs_density | ris_elements
        #[arg(long)]
        group_by: Option<SweepAxis>,
    },
    /// Closed-form Laplace transform against quadrature and Monte Carlo.
    ValidateLaplace,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Topology => "topology",
            Command::ValidatePower => "validate-power",
            Command::OutageSweep => "outage-sweep",
            Command::SisSim => "sis-sim",
            Command::R0Sweep { .. } => "r0-sweep",
            Command::ValidateLaplace => "validate-laplace",
        }
    }
}

fn note_override<T: std::fmt::Debug + PartialEq>(log: &mut dyn Write, key: &str, old: &T, new: &T) {
    if old != new {
        let _ = writeln!(log, "override {key}: {old:?} -> {new:?}");
    }
}

/// Loads the configuration and folds in command-line overrides, logging each change to `log`.
pub fn resolve_config(cli: &Cli, log: &mut dyn Write) -> Result<ExperimentConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let run = &mut config.run;
    if let Some(seed) = cli.seed {
        note_override(log, "run.seed", &run.seed, &seed);
        run.seed = seed;
    }
    if let Some(trials) = cli.trials {
        note_override(log, "run.trials", &run.trials, &trials);
        run.trials = trials;
    }
    if let Some(out) = &cli.out {
        note_override(log, "run.out", &run.out, out);
        run.out = out.clone();
    }
    if let Some(threads) = cli.threads {
        note_override(log, "run.threads", &run.threads, &Some(threads));
        run.threads = Some(threads);
    }
    if cli.manifest {
        run.manifest = true;
    }
    // one seed drives the whole run
    config.scenario.topology.seed = config.run.seed;
    config.sis.seed = config.run.seed;
    if let Command::R0Sweep { axis, group_by } = &cli.command {
        let mut sweep = config.sweep.clone().unwrap_or_else(|| config::Sweep::new(config::Axis::UeDensity));
        if let Some(a) = axis {
            let a = config::Axis::from(*a);
            note_override(log, "sweep.axis", &sweep.axis, &a);
            if a != sweep.axis {
                sweep.values.clear();
            }
            sweep.axis = a;
        }
        if let Some(g) = group_by {
            note_override(log, "sweep.group_by", &sweep.group_by, &Some(*g));
            if sweep.group_by != Some(*g) {
                sweep.group_values.clear();
            }
            sweep.group_by = Some(*g);
        }
        config.sweep = Some(sweep);
    }
    config.validate()?;
    Ok(config)
}

fn configure_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        // a second initialization in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Runs one parsed invocation, writing the human summary to `stdout` and logs to `stderr`.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let config = resolve_config(cli, stderr)?;
    configure_threads(config.run.threads);
    commands::dispatch(&cli.command, &config, stdout)
}
