use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use roomprint::features::{FeatureConfig, NaerParams, OCTAVE_CENTERS};
use roomprint::io::SignalFormat;
use roomprint::mls::MeasurementConfig;
use roomprint::roomid::ClassifierKind;
use roomprint::Exec;
use serde::Deserialize;

use crate::usage;

/// Options shared by every subcommand. Each overrides the same key of the
/// JSON config file, which in turn overrides the built-in default.
#[derive(Debug, Clone, Default, Args)]
pub struct Globals {
    /// JSON file with default values for any of the options below
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory that relative output paths are resolved against [default: .]
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Seed for every randomized step [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Analysis window in seconds [default: 1.5]
    #[arg(long, global = true, value_name = "SECONDS")]
    pub t_window: Option<f64>,

    /// Octave band centres in Hz [default: 250,500,1000,2000,4000,8000]
    #[arg(long, global = true, value_delimiter = ',', value_name = "HZ")]
    pub bands: Option<Vec<f64>>,

    /// NAER threshold relative to the energy at the onset [default: 0.1]
    #[arg(long, global = true)]
    pub naer_th: Option<f64>,

    /// Trailing fraction of the response used as the NAER noise estimate [default: 0.1]
    #[arg(long, global = true)]
    pub naer_per_noise: Option<f64>,

    /// MLS order; the period is 2^order - 1 samples [default: 17]
    #[arg(long, global = true)]
    pub mls_order: Option<u32>,

    /// Number of averaged MLS periods [default: 6]
    #[arg(long, global = true)]
    pub n_reps: Option<usize>,

    /// Sample rate in Hz, for CSV signals and synthesis [default: 44100]
    #[arg(long, global = true)]
    pub sample_rate: Option<f64>,

    /// gaussian_nb or knn:K [default: gaussian_nb]
    #[arg(long, global = true)]
    pub classifier: Option<ClassifierKind>,

    /// Cross-validation folds [default: 10]
    #[arg(long, global = true)]
    pub folds: Option<usize>,

    /// Signal file format written: wav, wav16 or csv [default: wav]
    #[arg(long, global = true)]
    pub format: Option<SignalFormat>,

    /// Run on one thread
    #[arg(long, global = true)]
    pub sequential: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
    t_window: Option<f64>,
    bands: Option<Vec<f64>>,
    naer_th: Option<f64>,
    naer_per_noise: Option<f64>,
    mls_order: Option<u32>,
    n_reps: Option<usize>,
    sample_rate: Option<f64>,
    classifier: Option<String>,
    folds: Option<usize>,
    format: Option<String>,
    sequential: Option<bool>,
}

/// Fully resolved options.
#[derive(Debug, Clone)]
pub struct Settings {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub features: FeatureConfig,
    pub measurement: MeasurementConfig,
    pub sample_rate: f64,
    pub classifier: ClassifierKind,
    pub folds: usize,
    pub format: SignalFormat,
    pub exec: Exec,
}

impl Settings {
    pub fn resolve(g: &Globals) -> Result<Self> {
        let file: FileConfig = match &g.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
            }
            None => FileConfig::default(),
        };
        let classifier = match (g.classifier, file.classifier) {
            (Some(k), _) => k,
            (None, Some(s)) => s
                .parse()
                .map_err(|e| usage(format!("config classifier: {e}")))?,
            (None, None) => ClassifierKind::default(),
        };
        let format = match (g.format, file.format) {
            (Some(f), _) => f,
            (None, Some(s)) => s
                .parse()
                .map_err(|e| usage(format!("config format: {e}")))?,
            (None, None) => SignalFormat::default(),
        };
        let defaults = NaerParams::default();
        let naer = NaerParams {
            threshold: g.naer_th.or(file.naer_th).unwrap_or(defaults.threshold),
            per_noise: g
                .naer_per_noise
                .or(file.naer_per_noise)
                .unwrap_or(defaults.per_noise),
            ..defaults
        };
        naer.validate().map_err(|e| usage(e.to_string()))?;
        let features = FeatureConfig {
            t_window: g
                .t_window
                .or(file.t_window)
                .unwrap_or(roomprint::features::DEFAULT_WINDOW_S),
            bands: g
                .bands
                .clone()
                .or(file.bands)
                .unwrap_or_else(|| OCTAVE_CENTERS.to_vec()),
            naer,
        };
        if !(features.t_window > 0.0) {
            return Err(usage("t-window must be positive"));
        }
        if features.bands.is_empty() {
            return Err(usage("at least one band is needed"));
        }
        let sample_rate = g.sample_rate.or(file.sample_rate).unwrap_or(44_100.0);
        let md = MeasurementConfig::default();
        let measurement = MeasurementConfig {
            mls_order: g.mls_order.or(file.mls_order).unwrap_or(md.mls_order),
            n_reps: g.n_reps.or(file.n_reps).unwrap_or(md.n_reps),
            sample_rate,
            ..md
        };
        measurement.validate().map_err(|e| usage(e.to_string()))?;
        let folds = g.folds.or(file.folds).unwrap_or(10);
        if folds < 2 {
            return Err(usage("at least 2 folds are needed"));
        }
        let sequential = g.sequential || file.sequential.unwrap_or(false);
        Ok(Settings {
            out_dir: g
                .out_dir
                .clone()
                .or(file.out_dir)
                .unwrap_or_else(|| PathBuf::from(".")),
            seed: g.seed.or(file.seed).unwrap_or(0),
            features,
            measurement,
            sample_rate,
            classifier,
            folds,
            format,
            exec: if sequential {
                Exec::Sequential
            } else {
                Exec::default()
            },
        })
    }

    /// Resolves an output path against the output directory.
    pub fn output(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.out_dir.join(path)
        }
    }
}
