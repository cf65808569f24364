//! TOML experiment configuration.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use fedcast_core::clean::CleaningPolicy;
use fedcast_core::federated::{StrategyKind, StrategyParams};
use fedcast_core::metrics::Task;
use fedcast_core::model::{ForecastModel, LossKind, ModelSpec, QuantileLevels, TrainConfig};
use fedcast_core::rng::derive_seed;
use fedcast_core::series::{InputShape, WindowSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AppError, AppResult};
use crate::synth::SyntheticSpec;

pub const SEED_ENV: &str = "FEDCAST_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Local,
    Centralized,
    Federated,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Local, Mode::Centralized, Mode::Federated];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Local => "local",
            Mode::Centralized => "centralized",
            Mode::Federated => "federated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvClient {
    pub id: String,
    pub path: PathBuf,
    /// Common grid step in seconds; defaults to the coarsest native step.
    #[serde(default)]
    pub step: Option<i64>,
}

/// Where client data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    /// `clients` independent draws from one spec; client `i` uses the seed
    /// `derive_seed(spec.seed, i)`.
    Synthetic { clients: usize, spec: SyntheticSpec },
    Csv { clients: Vec<CsvClient> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub lookback: usize,
    pub horizon: usize,
    /// One experiment per target channel.
    pub targets: Vec<String>,
    #[serde(default)]
    pub past_covariates: Vec<String>,
    #[serde(default)]
    pub future_covariates: Vec<String>,
}

impl WindowConfig {
    pub fn spec_for(&self, target: &str) -> WindowSpec {
        WindowSpec {
            lookback: self.lookback,
            horizon: self.horizon,
            target: target.to_string(),
            past_covariates: self.past_covariates.iter().filter(|c| *c != target).cloned().collect(),
            future_covariates: self.future_covariates.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(flatten)]
    pub spec: ModelSpec,
    #[serde(default)]
    pub quantiles: Option<QuantileLevels>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerConfig {
    #[serde(default = "default_strategy")]
    pub strategy: StrategyKind,
    #[serde(default)]
    pub eta_s: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub beta1: Option<f64>,
    #[serde(default)]
    pub beta2: Option<f64>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default = "one")]
    pub sample_fraction: f64,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default)]
    pub loss_prob: f64,
}

fn default_strategy() -> StrategyKind {
    StrategyKind::FedAvg
}

fn one() -> f64 {
    1.0
}

fn default_rounds() -> usize {
    50
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            strategy: default_strategy(),
            eta_s: None,
            beta: None,
            beta1: None,
            beta2: None,
            tau: None,
            sample_fraction: 1.0,
            rounds: default_rounds(),
            loss_prob: 0.0,
        }
    }
}

impl ServerConfig {
    /// Strategy defaults with any configured overrides applied.
    pub fn params(&self) -> StrategyParams {
        let d = StrategyParams::defaults_for(self.strategy);
        StrategyParams {
            eta_s: self.eta_s.unwrap_or(d.eta_s),
            beta: self.beta.unwrap_or(d.beta),
            beta1: self.beta1.unwrap_or(d.beta1),
            beta2: self.beta2.unwrap_or(d.beta2),
            tau: self.tau.unwrap_or(d.tau),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub train: f64,
    pub val: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { train: 0.7, val: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub data: DataSource,
    pub window: WindowConfig,
    pub model: ModelConfig,
    /// Every round, or every centralized/local training block, runs
    /// `train.epochs` epochs; there are `server.rounds` of them in all modes.
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub server: ServerConfig,
    #[serde(default)]
    pub split: SplitConfig,
    /// Per-channel valid ranges; channels without an entry are not cleaned.
    #[serde(default)]
    pub cleaning: BTreeMap<String, CleaningPolicy>,
    /// Acceptance task per target; defaults to whole-building energy.
    #[serde(default)]
    pub tasks: BTreeMap<String, Task>,
    #[serde(default)]
    pub per_step: bool,
    /// Record wall-clock round durations. Off by default because it makes
    /// round logs differ between otherwise identical runs.
    #[serde(default)]
    pub record_timing: bool,
}

fn default_mode() -> Mode {
    Mode::Federated
}

fn default_output() -> PathBuf {
    PathBuf::from("fedcast-out")
}

fn config_err(field: &str, e: impl std::fmt::Display) -> AppError {
    AppError::Config(format!("{field}: {e}"))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> AppResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))?;
        Ok(cfg.normalized())
    }

    /// Reads a config file and applies `FEDCAST_SEED` if set.
    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Ok(seed) = std::env::var(SEED_ENV) {
            cfg.seed = seed.trim().parse().map_err(|e| config_err(SEED_ENV, e))?;
        }
        // relative CSV paths are relative to the config file
        if let (DataSource::Csv { clients }, Some(dir)) = (&mut cfg.data, path.parent()) {
            for c in clients {
                if c.path.is_relative() {
                    c.path = dir.join(&c.path);
                }
            }
        }
        Ok(cfg)
    }

    /// The loss follows the model: pinball for quantile models, squared
    /// otherwise.
    fn loss(&self) -> LossKind {
        if self.model.quantiles.is_some() {
            LossKind::Quantile
        } else {
            LossKind::Squared
        }
    }

    fn normalized(mut self) -> Self {
        self.train.loss = self.loss();
        self
    }

    pub fn task_for(&self, target: &str) -> Task {
        self.tasks.get(target).copied().unwrap_or(Task::WholeBuildingEnergy)
    }

    /// Local training settings; the shuffling seed mixes the master seed
    /// with `train.seed`.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { seed: derive_seed(self.seed, self.train.seed), loss: self.loss(), ..self.train }
    }

    pub fn validate(&self) -> AppResult<()> {
        let w = &self.window;
        if w.targets.is_empty() {
            return Err(config_err("window.targets", "at least one target is required"));
        }
        let mut seen = BTreeSet::new();
        for t in &w.targets {
            if !seen.insert(t) {
                return Err(config_err("window.targets", format!("`{t}` is listed twice")));
            }
            w.spec_for(t).validate().map_err(|e| config_err("window", e))?;
        }
        match &self.data {
            DataSource::Synthetic { clients, spec } => {
                if *clients == 0 {
                    return Err(config_err("data.clients", "at least one client is required"));
                }
                spec.validate()?;
                let ids: BTreeSet<&str> = spec.channels.iter().map(|c| c.id.as_str()).collect();
                for ch in w.targets.iter().chain(&w.past_covariates).chain(&w.future_covariates) {
                    if !ids.contains(ch.as_str()) {
                        return Err(config_err("window", format!("channel `{ch}` is not produced by data.spec")));
                    }
                }
            }
            DataSource::Csv { clients } => {
                if clients.is_empty() {
                    return Err(config_err("data.clients", "at least one client is required"));
                }
                let mut ids = BTreeSet::new();
                for (i, c) in clients.iter().enumerate() {
                    if !ids.insert(&c.id) {
                        return Err(config_err(&format!("data.clients[{i}].id"), format!("duplicate `{}`", c.id)));
                    }
                    if c.step.is_some_and(|s| s <= 0) {
                        return Err(config_err(&format!("data.clients[{i}].step"), "must be positive"));
                    }
                }
            }
        }
        let probe = InputShape { lookback: w.lookback, horizon: w.horizon, past_covariates: 0, future_covariates: 0 };
        ForecastModel::new(self.model.spec.clone(), probe, self.model.quantiles.clone())
            .map_err(|e| config_err("model", e))?;
        self.train.validate().map_err(|e| config_err("train", e))?;
        let s = &self.server;
        s.params().validate().map_err(|e| config_err("server", e))?;
        if !(s.sample_fraction > 0.0 && s.sample_fraction <= 1.0) {
            return Err(config_err("server.sample_fraction", "must lie in (0, 1]"));
        }
        if s.rounds == 0 {
            return Err(config_err("server.rounds", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&s.loss_prob) {
            return Err(config_err("server.loss_prob", "must lie in [0, 1)"));
        }
        let sp = &self.split;
        if !(sp.train > 0.0 && sp.val >= 0.0 && sp.train + sp.val < 1.0) {
            return Err(config_err("split", "need train > 0, val >= 0 and train + val < 1"));
        }
        for (ch, p) in &self.cleaning {
            p.validate().map_err(|e| config_err(&format!("cleaning.{ch}"), e))?;
        }
        for t in self.tasks.keys() {
            if !w.targets.contains(t) {
                return Err(config_err(&format!("tasks.{t}"), "not a configured target"));
            }
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form of the
    /// config. The output directory does not take part.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone().normalized();
        canonical.output_dir = PathBuf::new();
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&json))[..16].to_string()
    }
}
