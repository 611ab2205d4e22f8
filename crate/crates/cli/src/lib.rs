//! `boostal` command line: synthetic data, experiment runs, and model train / predict / score.

mod bundle;
mod commands;

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use bundle::{IbugRows, ModelBundle, BUNDLE_FORMAT_VERSION};
pub use commands::{cmd_predict, cmd_run, cmd_score, cmd_synth, cmd_train, RunManifest, RunOutputs};

/// A failure reported as one `error: <kind>: <message>` line.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }

    pub(crate) fn io(path: &Path, err: std::io::Error) -> Self {
        Self::new("io", format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // keep the report on one line
        write!(f, "error: {}: {}", self.kind, self.message.replace('\n', " "))
    }
}

impl std::error::Error for CliError {}

impl From<boostal::Error> for CliError {
    fn from(e: boostal::Error) -> Self {
        Self::new(e.kind(), e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::new("csv", e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "boostal", version, about = "Active learning with uncertainty-aware gradient-boosted trees")]
pub struct Cli {
    /// Worker threads; affects speed only, never output.
    #[arg(long, global = true, env = "BOOSTAL_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Replace existing output files.
    #[arg(long)]
    pub overwrite: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Gaussian clusters, one per class.
    Blobs,
    /// Friedman-1 regression benchmark.
    Friedman1,
}

#[derive(Debug, Clone, Args)]
pub struct SynthParams {
    #[arg(long)]
    pub n: usize,
    /// Feature count for blobs.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    #[arg(long, default_value_t = 4.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
    /// Feature count for friedman1.
    #[arg(long, default_value_t = boostal::data::FRIEDMAN1_DEFAULT_FEATURES)]
    pub features: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset as CSV plus a `<stem>.schema.json` sidecar.
    Synth {
        #[arg(value_enum)]
        kind: SynthKind,
        #[command(flatten)]
        params: SynthParams,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run an experiment config; writes curves.csv, aggregate.csv and manifest.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Replace the config's seed list (repeatable).
        #[arg(long)]
        seed: Vec<u64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Fit a model on every labelled row of a CSV and save it as a JSON bundle.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// JSON file with training parameters; omitted fields take defaults.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Predict every row of a CSV with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Per-row acquisition scores from a saved model.
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        strategy: String,
        #[arg(long, default_value_t = 10)]
        ve_members: usize,
        #[arg(long, default_value_t = 20)]
        ibug_k: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

/// Executes a parsed command line inside a pool of the requested size.
pub fn execute(cli: Cli) -> Result<(), CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::new("config", "--threads must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::new("threads", e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Synth { kind, params, output } => cmd_synth(kind, &params, &output.out, output.overwrite).map(|_| ()),
        Command::Run { config, seed, output } => {
            let seeds = (!seed.is_empty()).then_some(seed);
            cmd_run(&config, &output.out, seeds.as_deref(), output.overwrite).map(|_| ())
        }
        Command::Train { data, schema, params, seed, output } => {
            cmd_train(&data, &schema, params.as_deref(), seed, &output.out, output.overwrite)
        }
        Command::Predict { model, data, output } => cmd_predict(&model, &data, &output.out, output.overwrite),
        Command::Score { model, data, strategy, ve_members, ibug_k, output } => {
            cmd_score(&model, &data, &strategy, ve_members, ibug_k, &output.out, output.overwrite)
        }
    })
}
