//! `roomprint`: synthesize, measure, fingerprint and identify rooms.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use roomprint::dataset::RowFilter;

use settings::{Globals, Settings};

#[derive(Debug, Parser)]
#[command(
    name = "roomprint",
    version,
    about = "Acoustic room fingerprinting pipeline"
)]
struct Cli {
    #[command(flatten)]
    globals: Globals,

    /// More log output (-v debug, -vv trace)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Only warnings and errors
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a corpus of room impulse responses
    Synth(SynthArgs),
    /// Recover impulse responses from MLS recordings
    Deconvolve(DeconvolveArgs),
    /// Extract fingerprints from a corpus into a dataset CSV
    Extract(ExtractArgs),
    /// Fit a classifier and save it as JSON
    Train(TrainArgs),
    /// Evaluate a classifier: cross-validation, train/test splits, window sweeps
    Eval(EvalArgs),
    /// Select a feature subset by sequential floating forward selection
    Sffs(SffsArgs),
    /// Permutation tests of feature distinctiveness between rooms
    Permtest(PermtestArgs),
}

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    /// Room list (JSON array of room specs); the built-in ten rooms if omitted
    #[arg(long)]
    pub rooms: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub positions: u32,
    /// Samples per position
    #[arg(long, default_value_t = 50)]
    pub samples: u32,
    /// Response length in seconds
    #[arg(long, default_value_t = 2.8)]
    pub duration: f64,
    #[arg(long, default_value_t = 0)]
    pub visit: u32,
    /// Inject transient bursts and lower the PNR (noisy condition)
    #[arg(long)]
    pub noisy: bool,
    /// Disable position and sample jitter
    #[arg(long)]
    pub no_jitter: bool,
    /// Also write simulated MLS recordings to OUT/recordings
    #[arg(long)]
    pub recordings: bool,
}

#[derive(Debug, clap::Args)]
pub struct DeconvolveArgs {
    /// Recording files or directories of recordings
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Length of the written responses in seconds; the full period if omitted
    #[arg(long)]
    pub duration: Option<f64>,
    /// fht or fft
    #[arg(long, default_value = "fht", value_parser = parse_path)]
    pub path: roomprint::mls::DeconvPath,
    /// Keep the first recorded period instead of discarding it
    #[arg(long)]
    pub no_discard: bool,
    /// Write per-file PNR as JSON
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct ExtractArgs {
    /// Corpus directories or manifest.csv files
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Dataset CSV to write
    #[arg(long)]
    pub out: PathBuf,
    /// Provenance JSON [default: OUT with extension .manifest.json]
    #[arg(long)]
    pub manifest_out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct FeatureSelection {
    /// Comma-separated feature names [default: all]
    #[arg(long, value_delimiter = ',', conflicts_with = "features_from")]
    pub features: Option<Vec<String>>,
    /// Take the feature subset from an sffs report
    #[arg(long)]
    pub features_from: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Model JSON to write
    #[arg(long)]
    pub out: PathBuf,
    /// Training rows: all, or key=value pairs over visit, noise, position, label
    #[arg(long, default_value = "all")]
    pub filter: RowFilter,
    #[command(flatten)]
    pub selection: FeatureSelection,
}

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    /// Dataset CSV
    #[arg(long, required_unless_present = "corpus", conflicts_with = "corpus")]
    pub dataset: Option<PathBuf>,
    /// Corpus directories, extracted on the fly (needed by --sweep-window)
    #[arg(long, num_args = 1..)]
    pub corpus: Option<Vec<PathBuf>>,
    /// Evaluate a saved model on the test rows instead of training
    #[arg(long, conflicts_with = "sweep_window")]
    pub model: Option<PathBuf>,
    #[arg(long, default_value = "all")]
    pub train_filter: RowFilter,
    #[arg(long, default_value = "all")]
    pub test_filter: RowFilter,
    #[command(flatten)]
    pub selection: FeatureSelection,
    /// Windows in seconds to sweep; one evaluation per window
    #[arg(long, value_delimiter = ',', requires = "corpus")]
    pub sweep_window: Option<Vec<f64>>,
    /// Confusion matrix CSV (counts)
    #[arg(long)]
    pub confusion_out: Option<PathBuf>,
    /// Accuracy report JSON
    #[arg(long)]
    pub report_out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct SffsArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Rows the selection trains on
    #[arg(long, default_value = "all")]
    pub filter: RowFilter,
    /// Held-out rows whose error is averaged with the cross-validated error of the training rows
    #[arg(long)]
    pub validation_filter: Option<RowFilter>,
    /// Largest subset size [default: all features]
    #[arg(long)]
    pub max_features: Option<usize>,
    /// Report JSON to write
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct PermtestArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value = "all")]
    pub filter: RowFilter,
    #[command(flatten)]
    pub selection: FeatureSelection,
    #[arg(long, default_value_t = 4999)]
    pub n_perm: usize,
    #[arg(long, default_value_t = 32)]
    pub bins: usize,
    /// Report JSON to write
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_path(s: &str) -> Result<roomprint::mls::DeconvPath, String> {
    match s {
        "fht" => Ok(roomprint::mls::DeconvPath::Fht),
        "fft" => Ok(roomprint::mls::DeconvPath::Fft),
        other => Err(format!("unknown deconvolution path {other:?} (fht or fft)")),
    }
}

/// A problem with how the tool was invoked.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<roomprint::Error>() {
            return if e.is_numerical() { 3 } else { 2 };
        }
    }
    2
}

/// The error chain, skipping causes whose text an outer message already
/// includes.
fn describe(err: &anyhow::Error) -> String {
    let mut msg = err.to_string();
    for cause in err.chain().skip(1) {
        let text = cause.to_string();
        if !msg.contains(&text) {
            msg.push_str(": ");
            msg.push_str(&text);
        }
    }
    msg
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let settings = Settings::resolve(&cli.globals)?;
    log::debug!("settings: {settings:?}");
    match cli.command {
        Command::Synth(a) => commands::synth(&settings, &a),
        Command::Deconvolve(a) => commands::deconvolve(&settings, &a),
        Command::Extract(a) => commands::extract(&settings, &a),
        Command::Train(a) => commands::train(&settings, &a),
        Command::Eval(a) => commands::eval(&settings, &a),
        Command::Sffs(a) => commands::sffs(&settings, &a),
        Command::Permtest(a) => commands::permtest(&settings, &a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => "warn",
        (false, 0) => "info",
        (false, 1) => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_target(false)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
