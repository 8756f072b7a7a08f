//! Run configuration files (JSON) shared by the CLI and the examples.
//!
//! The schema is strict: unknown keys are rejected, and anything not
//! given falls back to the per-scenario defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::ChannelConfig;
use crate::dynamics::ShipParams;
use crate::marl::TrainConfig;
use crate::scenarios::{RewardConstants, Scenario, WorldConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config schema error: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioBlock,
    #[serde(default)]
    pub training: TrainingBlock,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    pub output_dir: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioBlock {
    pub kind: Scenario,
    #[serde(default)]
    pub channel: Option<ChannelConfig>,
    #[serde(default)]
    pub n_ships: Option<usize>,
    #[serde(default)]
    pub n_landmarks: Option<usize>,
    #[serde(default)]
    pub message_len: Option<usize>,
    #[serde(default)]
    pub max_steps: Option<usize>,
    #[serde(default)]
    pub arena_half_width: Option<f64>,
    #[serde(default)]
    pub spawn_radius_inner: Option<f64>,
    #[serde(default)]
    pub spawn_radius_outer: Option<f64>,
    #[serde(default)]
    pub fixed_standon: Option<bool>,
    #[serde(default)]
    pub force_give_way_first: Option<bool>,
    #[serde(default)]
    pub rewards: Option<RewardConstants>,
    /// Key/value ship parameter file; the embedded 7 m USV otherwise.
    #[serde(default)]
    pub ship_params_file: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingBlock {
    #[serde(default)]
    pub episodes: Option<usize>,
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub actor_lr: Option<f64>,
    #[serde(default)]
    pub critic_lr: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub buffer_capacity: Option<usize>,
    #[serde(default)]
    pub warmup_factor: Option<usize>,
    #[serde(default)]
    pub update_interval: Option<usize>,
    #[serde(default)]
    pub actor_hidden: Option<Vec<usize>>,
    #[serde(default)]
    pub critic_hidden: Option<Vec<usize>>,
    #[serde(default)]
    pub ou_theta: Option<f64>,
    #[serde(default)]
    pub ou_sigma: Option<f64>,
    #[serde(default)]
    pub ou_sigma_final: Option<f64>,
    #[serde(default)]
    pub ou_decay_fraction: Option<f64>,
    #[serde(default)]
    pub gumbel_temperature: Option<f64>,
    #[serde(default)]
    pub eval_interval: Option<usize>,
    #[serde(default)]
    pub eval_episodes: Option<usize>,
    #[serde(default)]
    pub final_eval_episodes: Option<usize>,
    #[serde(default)]
    pub stop_at_eval_success: Option<f64>,
    #[serde(default)]
    pub independent_ddpg: Option<bool>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub kind: crate::analysis::SweepKind,
    pub values: Vec<f64>,
    pub policies: Vec<crate::analysis::sweep::SweepPolicy>,
    #[serde(default = "default_sweep_episodes")]
    pub episodes: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_sweep_episodes() -> usize {
    200
}

impl RunConfig {
    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|source| ConfigError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        })?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.world_config()?.validate().map_err(|e| {
            ConfigError::Invalid(e.to_string())
        })?;
        cfg.train_config().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(cfg)
    }

    pub fn world_config(&self) -> Result<WorldConfig, ConfigError> {
        let s = &self.scenario;
        let mut w = match s.kind {
            Scenario::Navigation => WorldConfig::navigation(),
            Scenario::Avoidance => WorldConfig::avoidance(),
        };
        if let Some(c) = s.channel {
            w.channel = c;
        }
        if let Some(v) = s.n_ships {
            w.n_ships = v;
        }
        if let Some(v) = s.n_landmarks {
            w.n_landmarks = v;
        }
        if let Some(v) = s.message_len {
            w.message_len = v;
        }
        if let Some(v) = s.max_steps {
            w.max_steps = v;
        }
        if let Some(v) = s.arena_half_width {
            w.arena_half_width = v;
        }
        if let Some(v) = s.spawn_radius_inner {
            w.spawn_radius_inner = v;
        }
        if let Some(v) = s.spawn_radius_outer {
            w.spawn_radius_outer = v;
        }
        if let Some(v) = s.fixed_standon {
            w.fixed_standon = v;
            if v {
                w.force_give_way_first = true;
            }
        }
        if let Some(v) = s.force_give_way_first {
            w.force_give_way_first = v;
        }
        if let Some(r) = s.rewards {
            w.rewards = r;
        }
        if let Some(path) = &s.ship_params_file {
            w.ship = ShipParams::from_file(path)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(w)
    }

    pub fn train_config(&self) -> TrainConfig {
        let mut t = match self.scenario.kind {
            Scenario::Navigation => TrainConfig::navigation(),
            Scenario::Avoidance => TrainConfig::avoidance(),
        };
        let b = &self.training;
        macro_rules! apply {
            ($($field:ident),* $(,)?) => {
                $(if let Some(v) = b.$field.clone() { t.$field = v; })*
            };
        }
        apply!(
            episodes,
            batch_size,
            actor_lr,
            critic_lr,
            gamma,
            tau,
            buffer_capacity,
            warmup_factor,
            update_interval,
            actor_hidden,
            critic_hidden,
            ou_theta,
            ou_sigma,
            ou_sigma_final,
            ou_decay_fraction,
            gumbel_temperature,
            eval_interval,
            eval_episodes,
            final_eval_episodes,
            independent_ddpg,
            seed,
        );
        if b.stop_at_eval_success.is_some() {
            t.stop_at_eval_success = b.stop_at_eval_success;
        }
        t
    }

    /// Output directory, with the environment override applied. The
    /// `SHIPMARL_OUT_ROOT` variable re-roots relative output paths.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os("SHIPMARL_OUT_ROOT") {
            Some(root) if self.output_dir.is_relative() => {
                PathBuf::from(root).join(&self.output_dir)
            }
            _ => self.output_dir.clone(),
        }
    }
}
