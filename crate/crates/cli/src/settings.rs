use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use qdnn::data::AngleScale;
use qdnn::grad::GradientEngine;
use qdnn::network::{mnist_layer_specs, LrSchedule, QnnLayerSpec, TrainConfig};
use serde::Deserialize;

/// Bad flags, environment or config values. Exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage_error(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Parser)]
#[command(name = "qdnn", version, about = "Train and check quantum neural network classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a classifier on the MNIST 0/1 subset.
    Train(TrainArgs),
    /// Score a checkpoint on one split.
    Eval(EvalArgs),
    /// Compare shift-rule, finite-difference and adjoint gradients.
    Gradcheck(GradcheckArgs),
    /// Print exactness tables for monomial and cosine circuits.
    ApproxDemo(ApproxArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML file with defaults for any flag of this command.
    #[arg(long, env = "QDNN_CONFIG")]
    pub config: Option<PathBuf>,
    /// Worker threads for batch evaluation (0 = one per core).
    #[arg(long, env = "QDNN_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, env = "QDNN_SEED")]
    pub seed: Option<u64>,
    /// shift | adjoint
    #[arg(long, env = "QDNN_ENGINE")]
    pub engine: Option<GradientEngine>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Directory holding the four MNIST IDX files.
    #[arg(long, env = "QDNN_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
    /// Where metrics.csv and checkpoints are written.
    #[arg(long, env = "QDNN_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
    #[arg(long, env = "QDNN_ITERATIONS")]
    pub iterations: Option<usize>,
    #[arg(long, env = "QDNN_BATCH")]
    pub batch: Option<usize>,
    /// Learning rate before --switch-at.
    #[arg(long, env = "QDNN_ETA")]
    pub eta: Option<f64>,
    /// Learning rate from --switch-at on.
    #[arg(long, env = "QDNN_ETA2")]
    pub eta2: Option<f64>,
    /// Zero-based update index where --eta2 takes over.
    #[arg(long, env = "QDNN_SWITCH_AT")]
    pub switch_at: Option<usize>,
    /// Test-set evaluation cadence (0: only first and last row).
    #[arg(long, env = "QDNN_EVAL_EVERY")]
    pub eval_every: Option<usize>,
    /// Checkpoint cadence in iterations (0: final checkpoint only).
    #[arg(long, env = "QDNN_CHECKPOINT_EVERY")]
    pub checkpoint_every: Option<usize>,
    /// Radians per unit pixel intensity, in (0, pi].
    #[arg(long, env = "QDNN_ANGLE_SCALE")]
    pub angle_scale: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, env = "QDNN_CHECKPOINT")]
    pub checkpoint: PathBuf,
    #[arg(long, env = "QDNN_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Split::Test)]
    pub split: Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NetworkChoice {
    Mnist,
    None,
}

#[derive(Debug, Clone, Args)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of random circuit jobs.
    #[arg(long, default_value_t = 50)]
    pub jobs: usize,
    #[arg(long, default_value_t = 2)]
    pub min_qubits: usize,
    #[arg(long, default_value_t = 6)]
    pub max_qubits: usize,
    /// Also check every parameter of this network.
    #[arg(long, value_enum, default_value_t = NetworkChoice::Mnist)]
    pub layers: NetworkChoice,
    /// Samples in the network check batch.
    #[arg(long, default_value_t = 2)]
    pub batch: usize,
    #[arg(long, default_value_t = qdnn::grad::DEFAULT_FD_STEP)]
    pub fd_step: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ApproxArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Largest number of variables in the monomial table.
    #[arg(long, default_value_t = 3)]
    pub max_vars: usize,
    #[arg(long, default_value_t = 6)]
    pub max_degree: usize,
    /// Grid points per variable on [0, 1].
    #[arg(long, default_value_t = 11)]
    pub points: usize,
}

/// Values accepted in a `--config` TOML file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub data_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub engine: Option<GradientEngine>,
    pub iterations: Option<usize>,
    pub batch: Option<usize>,
    pub eta: Option<f64>,
    pub eta2: Option<f64>,
    pub switch_at: Option<usize>,
    pub eval_every: Option<usize>,
    pub checkpoint_every: Option<usize>,
    pub angle_scale: Option<f64>,
    /// Replaces the default three-layer architecture.
    pub layers: Option<Vec<QnnLayerSpec>>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        toml::from_str(&text).map_err(|e| usage_error(format!("config file {}: {e}", path.display())))
    }
}

pub const DEFAULT_OUT_DIR: &str = "qdnn-out";
pub const DEFAULT_ITERATIONS: usize = 400;
pub const DEFAULT_BATCH: usize = 240;
pub const DEFAULT_ETA: f64 = 0.01;
pub const DEFAULT_ETA2: f64 = 0.001;
pub const DEFAULT_SWITCH_AT: usize = 200;
pub const DEFAULT_EVAL_EVERY: usize = 10;
pub const DEFAULT_CHECKPOINT_EVERY: usize = 50;

/// Thread count after flag, environment and config file.
pub fn resolve_threads(common: &CommonArgs, file: &ConfigFile) -> Option<usize> {
    common.threads.or(file.threads).filter(|&n| n > 0)
}

pub fn resolve_seed(common: &CommonArgs, file: &ConfigFile) -> u64 {
    common.seed.or(file.seed).unwrap_or(0)
}

pub fn resolve_engine(common: &CommonArgs, file: &ConfigFile) -> GradientEngine {
    common.engine.or(file.engine).unwrap_or_default()
}

pub fn resolve_data_dir(flag: &Option<PathBuf>, file: &ConfigFile) -> anyhow::Result<PathBuf> {
    flag.clone()
        .or_else(|| file.data_dir.clone())
        .filter(|p| !p.as_os_str().is_empty())
        .ok_or_else(|| usage_error("missing --data-dir (or QDNN_DATA_DIR, or data_dir in the config file)"))
}

/// Everything `train` needs once flags, environment and config are merged.
#[derive(Debug, Clone)]
pub struct TrainSettings {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub checkpoint_every: usize,
    pub angle_scale: AngleScale,
    pub layers: Vec<QnnLayerSpec>,
    pub config: TrainConfig,
}

impl TrainSettings {
    pub fn resolve(a: &TrainArgs, file: &ConfigFile) -> anyhow::Result<Self> {
        let eta = a.eta.or(file.eta).unwrap_or(DEFAULT_ETA);
        let eta2 = a.eta2.or(file.eta2).unwrap_or(DEFAULT_ETA2);
        let switch_at = a.switch_at.or(file.switch_at).unwrap_or(DEFAULT_SWITCH_AT);
        let schedule = LrSchedule::two_phase(eta, eta2, switch_at).map_err(|e| usage_error(e.to_string()))?;
        let batch_size = a.batch.or(file.batch).unwrap_or(DEFAULT_BATCH);
        if batch_size == 0 {
            return Err(usage_error("--batch must be at least 1"));
        }
        let scale = a.angle_scale.or(file.angle_scale).map_or(Ok(AngleScale::DEFAULT), AngleScale::new);
        Ok(Self {
            data_dir: resolve_data_dir(&a.data_dir, file)?,
            out_dir: a
                .out_dir
                .clone()
                .or_else(|| file.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
            checkpoint_every: a
                .checkpoint_every
                .or(file.checkpoint_every)
                .unwrap_or(DEFAULT_CHECKPOINT_EVERY),
            angle_scale: scale.map_err(|e| usage_error(e.to_string()))?,
            layers: file.layers.clone().unwrap_or_else(mnist_layer_specs),
            config: TrainConfig {
                iterations: a.iterations.or(file.iterations).unwrap_or(DEFAULT_ITERATIONS),
                batch_size,
                schedule,
                seed: resolve_seed(&a.common, file),
                engine: resolve_engine(&a.common, file),
                eval_every: a.eval_every.or(file.eval_every).unwrap_or(DEFAULT_EVAL_EVERY),
            },
        })
    }
}
