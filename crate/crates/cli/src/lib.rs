//! Command-line front end for the `gapband` toolkit: mixture simulations,
//! removal experiments, feature extraction and single-classifier training.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod model;
pub mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gapband_core::corruption::RemovalMode;
use gapband_core::eval::ClassifierKind;

pub use error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "gapband",
    version,
    about = "Spectral features and classifiers for signals with missing samples"
)]
pub struct Cli {
    /// TOML file with parameter overrides.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice a command makes.
    #[arg(long, global = true)]
    pub master_seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Format of tabular outputs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

/// Where a command gets its trials.
#[derive(Debug, Clone, Args)]
pub struct DataSource {
    /// Dataset CSV to read.
    #[arg(long, conflicts_with = "generate")]
    pub dataset: Option<PathBuf>,
    /// Use the built-in surrogate generator instead of a file.
    #[arg(long)]
    pub generate: bool,
    /// Restrict to one subject.
    #[arg(long)]
    pub subject: Option<u32>,
    /// Restrict to one session.
    #[arg(long)]
    pub session: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Periodograms of the two-tone mixture under increasing point removal.
    Simulate {
        /// Removal fractions, comma separated.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
    },
    /// Train-on-session, test-on-next-session evaluation under removal.
    Experiment {
        #[command(flatten)]
        source: DataSource,
        #[arg(long, value_delimiter = ',')]
        classifier: Option<Vec<ClassifierKind>>,
        #[arg(long, value_delimiter = ',')]
        mode: Option<Vec<RemovalMode>>,
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
        /// Train on permuted labels (chance baseline).
        #[arg(long)]
        shuffle_labels: bool,
        /// Apply the same removal to training sessions.
        #[arg(long)]
        mask_training: bool,
        /// Also write the dataset that was evaluated.
        #[arg(long)]
        save_dataset: bool,
    },
    /// Fit one classifier and write it as JSON.
    Train {
        /// Feature CSV as written by `extract`.
        #[arg(long, conflicts_with_all = ["dataset", "generate"])]
        features: Option<PathBuf>,
        #[command(flatten)]
        source: DataSource,
        #[arg(long, default_value = "dae")]
        classifier: ClassifierKind,
    },
    /// Per-window predictions from a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, conflicts_with_all = ["dataset", "generate"])]
        features: Option<PathBuf>,
        #[command(flatten)]
        source: DataSource,
    },
    /// Remove samples from every trial and write the result with its masks.
    Mask {
        #[command(flatten)]
        source: DataSource,
        #[arg(long)]
        mode: Option<RemovalMode>,
        #[arg(long)]
        fraction: Option<f64>,
    },
    /// Window-level log band-power features.
    Extract {
        #[command(flatten)]
        source: DataSource,
    },
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> CliResult<()> {
    commands::dispatch(cli)
}
