use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "langevin-kit", version, about = "Kinetic Langevin contraction and sampling experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synchronously coupled runs; distance trajectories as CSV.
    Couple(CoupleArgs),
    /// Spectral-gap contour over a log-spaced (gamma, h) grid.
    Spectral(SpectralArgs),
    /// Grid certificate of the positivity conditions; JSON report.
    Certify(CertifyArgs),
    /// Replicated sampling runs; one summary row per scheme.
    Sample(SampleArgs),
    /// Bias of E[f] against a reference over (scheme, h, gamma) cells.
    Bias(BiasArgs),
}

/// Flags shared by every subcommand. Not part of the stored config.
#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct Io {
    /// JSON config file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Writes the resolved config (file merged with flags) here.
    #[arg(long)]
    pub write_config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    Gaussian,
    BlrSynth,
    BlrIdx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GradKind {
    Full,
    Sg,
    Vrsg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

/// Target description. `m`/`M` apply to the Gaussian; the rest to the
/// logistic-regression targets.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct TargetArgs {
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[arg(long = "M")]
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub big_m: Option<f64>,
    /// Rows of the synthetic data set.
    #[arg(long = "n-data")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_data: Option<usize>,
    /// Features of the synthetic data set.
    #[arg(long = "dim")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separation: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_variance: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mnist_images: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mnist_labels: Option<PathBuf>,
    /// Two digits kept from the IDX labels, e.g. `3,5`.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub digits: Option<Vec<u8>>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct CoupleArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,
    /// Comma-separated scheme tags, or `all` for the eight kinetic schemes.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub target: TargetArgs,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// Initial pairs (full gradient) or replicas (stochastic gradient).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad: Option<GradKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch: Option<usize>,
    /// Output path; with several schemes the tag is appended to the stem.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectralArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[arg(long = "M")]
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub big_m: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_min: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_points: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_min: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_points: Option<usize>,
    /// Matrix products per rOABAO cell.
    #[arg(long = "lyapunov-N")]
    #[serde(rename = "lyapunov-N", skip_serializing_if = "Option::is_none")]
    pub lyapunov_n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct CertifyArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[arg(long = "M")]
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub big_m: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_points: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_points: Option<usize>,
    /// Also certify EM, BAOAB, OBABO and SES from their one-step maps.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extended: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// Settings shared by `sample` and `bias`.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct RunArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub target: TargetArgs,
    /// Comma-separated list.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    /// Comma-separated list.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad: Option<GradKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct BiasArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub io: Io,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    /// Known reference mean; omitted means an internal quarter-step BAOAB run.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_se: Option<f64>,
}

/// The on-disk config: `{"version": 1, "command": "...", <flags>}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(flatten)]
    pub command: CommandConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum CommandConfig {
    Couple(CoupleArgs),
    Spectral(SpectralArgs),
    Certify(CertifyArgs),
    Sample(SampleArgs),
    Bias(BiasArgs),
}

fn read_config_object(path: &Path, command: &str) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    let Value::Object(mut obj) = value else {
        return Err(CliError::Usage(format!("config {} is not a JSON object", path.display())));
    };
    match obj.remove("version") {
        Some(Value::Number(n)) if n.as_u64() == Some(CONFIG_VERSION as u64) => {}
        Some(v) => {
            return Err(CliError::Usage(format!(
                "config {}: unsupported version {v} (expected {CONFIG_VERSION})",
                path.display()
            )))
        }
        None => {
            return Err(CliError::Usage(format!(
                "config {}: missing \"version\" field",
                path.display()
            )))
        }
    }
    match obj.remove("command") {
        None => {}
        Some(Value::String(c)) if c == command => {}
        Some(c) => {
            return Err(CliError::Usage(format!(
                "config {} is for command {c}, not {command}",
                path.display()
            )))
        }
    }
    Ok(obj)
}

/// Overlays the flags given on the command line onto the config file, if
/// any. Keys absent from both stay `None`.
pub fn resolve<T>(flags: &T, io: &Io, command: &str) -> Result<T, CliError>
where
    T: Serialize + DeserializeOwned,
{
    let Value::Object(given) = serde_json::to_value(flags).expect("flag structs serialize") else {
        unreachable!("flag structs serialize to objects")
    };
    let mut merged = match &io.config {
        Some(path) => read_config_object(path, command)?,
        None => Map::new(),
    };
    merged.extend(given);
    let keys: Vec<String> = merged.keys().cloned().collect();
    let resolved: T =
        serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Usage(format!("config: {e}")))?;
    // Every recognised key survives the round trip, so leftovers are unknown.
    let Value::Object(known) = serde_json::to_value(&resolved).expect("flag structs serialize") else {
        unreachable!("flag structs serialize to objects")
    };
    let unknown: Vec<&str> = keys.iter().filter(|k| !known.contains_key(*k)).map(|k| k.as_str()).collect();
    if !unknown.is_empty() {
        return Err(CliError::Usage(format!("config: unknown keys {}", unknown.join(", "))));
    }
    Ok(resolved)
}

pub fn write_config(path: &Path, command: CommandConfig) -> Result<(), CliError> {
    let cfg = ExperimentConfig {
        version: CONFIG_VERSION,
        command,
    };
    let mut text = serde_json::to_string_pretty(&cfg).expect("config serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Io(path.to_path_buf(), e))
}
