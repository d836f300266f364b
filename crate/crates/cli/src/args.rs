//! Command-line arguments and the optional TOML config file. Every value is
//! optional on the command line so a config file can supply it; flags win.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "corteml", version, about = "EEG asymmetry features and empathy-score models")]
pub struct Cli {
    /// TOML file with a table per command, e.g. `[classify]`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Run every data-parallel loop on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,

    /// Repeat for more log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort with a planted frontal-alpha effect.
    Synth(SynthArgs),
    /// Filter, segment and reduce raw recordings to the feature table.
    Extract(ExtractArgs),
    /// Rank features with the five-method ensemble and pick the top k.
    Select(SelectArgs),
    /// Cross-validated OLS regression of the empathy score.
    Regress(RegressArgs),
    /// Cross-validated classification of binned empathy scores.
    Classify(ClassifyArgs),
    /// Render a CSV report or a saved model as an aligned text table.
    Report(ReportArgs),
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub n_subjects: Option<usize>,
    /// Sampling rate in Hz.
    #[arg(long)]
    pub fs: Option<f64>,
    #[arg(long)]
    pub segment_seconds: Option<f64>,
    /// Planted ln-power ratio per unit of normalized score.
    #[arg(long)]
    pub coupling: Option<f64>,
    #[arg(long)]
    pub noise_sd: Option<f64>,
    #[arg(long)]
    pub score_lo: Option<u32>,
    #[arg(long)]
    pub score_hi: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractArgs {
    /// Directory of recordings: `<subject>_<segment>.csv`, or one
    /// `<subject>.csv` per subject when `--boundaries` is given.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Feature table to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sampling rate in Hz; overrides `# fs=` lines in the files.
    #[arg(long)]
    pub fs: Option<f64>,
    /// Two sample indices cutting continuous recordings, e.g. `5120,10240`.
    #[arg(long)]
    pub boundaries: Option<String>,
    /// CSV with `subject` and `score` columns [default: <input>/manifest.csv].
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Drop subjects with any |z| above this; `inf` keeps everyone.
    #[arg(long)]
    pub outlier_z: Option<f64>,
    /// `per-segment` or `pooled`.
    #[arg(long)]
    pub outlier_scope: Option<String>,
    /// Welch window length in seconds.
    #[arg(long)]
    pub welch_seconds: Option<f64>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectArgs {
    /// Feature table.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Directory for the ranking, correlation and selection files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Features kept per segment.
    #[arg(long)]
    pub k: Option<usize>,
    /// Comma-separated segments [default: all].
    #[arg(long, value_delimiter = ',')]
    pub segments: Option<Vec<String>>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressArgs {
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Directory for the metric, coefficient and assumption reports.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Selection file from `select`; adds the selected-feature models.
    #[arg(long)]
    pub selection: Option<PathBuf>,
    /// Re-select the top k inside every training fold instead.
    #[arg(long)]
    pub select_within_folds: bool,
    #[arg(long)]
    pub k: Option<usize>,
    /// `kfold` or `loo`.
    #[arg(long)]
    pub cv: Option<String>,
    /// Number of folds for `--cv kfold`.
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub segments: Option<Vec<String>>,
    /// Write each full-cohort fit as `<segment>_<n>f.model` here.
    #[arg(long)]
    pub save_models: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Regression takes the raw score; any label scheme is rejected.
    #[arg(long, hide = true)]
    pub labels: Option<String>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Metric report to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub selection: Option<PathBuf>,
    #[arg(long)]
    pub select_within_folds: bool,
    #[arg(long)]
    pub k: Option<usize>,
    /// `binary` (median split) or `three` (equal-interval bins).
    #[arg(long)]
    pub labels: Option<String>,
    /// Comma-separated families: lr, svm, dt.
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    /// `loo` or `kfold`.
    #[arg(long)]
    pub cv: Option<String>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Use each family's default hyperparameters instead of the grid.
    #[arg(long)]
    pub no_grid: bool,
    /// Search the grid once on the whole cohort rather than per fold.
    #[arg(long)]
    pub grid_global: bool,
    #[arg(long, value_delimiter = ',')]
    pub segments: Option<Vec<String>>,
    /// Write each full-cohort classifier as `<segment>_<family>.model` here.
    #[arg(long)]
    pub save_models: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportArgs {
    /// CSV report or `.model` file.
    pub input: Option<PathBuf>,
    /// Decimal places for numeric cells.
    #[arg(long)]
    pub precision: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    /// Fallback seed for every command.
    pub seed: Option<u64>,
    pub synth: SynthArgs,
    pub extract: ExtractArgs,
    pub select: SelectArgs,
    pub regress: RegressArgs,
    pub classify: ClassifyArgs,
    pub report: ReportArgs,
}

/// Config files are user input, so a bad one is reported like a schema error.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).map_err(|e| ConfigError(format!("config {}: {e}", path.display())).into())
}

macro_rules! fill {
    ($cli:ident, $file:ident; $($opt:ident),* ; $($flag:ident),*) => {{
        $( if $cli.$opt.is_none() { $cli.$opt = $file.$opt.take(); } )*
        $( $cli.$flag |= $file.$flag; )*
    }};
}

impl Command {
    /// Fill unset values from the config file.
    pub fn merge(&mut self, mut file: ConfigFile) {
        let seed = file.seed;
        match self {
            Command::Synth(a) => {
                let f = &mut file.synth;
                fill!(a, f; out, n_subjects, fs, segment_seconds, coupling, noise_sd, score_lo, score_hi, seed;);
                a.seed = a.seed.or(seed);
            }
            Command::Extract(a) => {
                let f = &mut file.extract;
                fill!(a, f; input, out, fs, boundaries, scores, outlier_z, outlier_scope, welch_seconds;);
            }
            Command::Select(a) => {
                let f = &mut file.select;
                fill!(a, f; features, out, k, segments, seed;);
                a.seed = a.seed.or(seed);
            }
            Command::Regress(a) => {
                let f = &mut file.regress;
                fill!(a, f; features, out, selection, k, cv, folds, segments, save_models, seed, labels; select_within_folds);
                a.seed = a.seed.or(seed);
            }
            Command::Classify(a) => {
                let f = &mut file.classify;
                fill!(a, f; features, out, selection, k, labels, models, cv, folds, segments, save_models, seed;
                    select_within_folds, no_grid, grid_global);
                a.seed = a.seed.or(seed);
            }
            Command::Report(a) => {
                let f = &mut file.report;
                fill!(a, f; input, precision;);
            }
        }
    }
}
