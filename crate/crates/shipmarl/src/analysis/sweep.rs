//! Noise sweeps: evaluate trained checkpoints across a grid of channel
//! noise levels.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::channels::{snr_db_to_sigma2, ChannelConfig};
use crate::marl::{evaluate, EvalOptions, Maddpg, TrainConfig};
use crate::scenarios::WorldConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    /// Values are bit-flip probabilities.
    Bsc,
    /// Values are SNR in dB, converted to AWGN variances.
    AwgnSnrDb,
}

impl SweepKind {
    pub fn channel_for(&self, value: f64) -> ChannelConfig {
        match self {
            SweepKind::Bsc => ChannelConfig::bsc(value),
            SweepKind::AwgnSnrDb => ChannelConfig::awgn(snr_db_to_sigma2(value)),
        }
    }
}

/// One checkpoint to sweep, tagged with the noise level it was trained at.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepPolicy {
    pub label: String,
    pub checkpoint: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub policy: String,
    pub test_value: f64,
    pub success_rate: f64,
    pub success_se: f64,
    pub mean_steps: f64,
    pub steps_se: f64,
    pub episodes: usize,
    pub successes: usize,
}

#[derive(Clone, Debug, Default)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// Checkpoints that could not be loaded, with reasons.
    pub skipped: Vec<String>,
}

/// Evaluates every (policy x test value) cell. Missing or incompatible
/// checkpoints are reported in `skipped` rather than failing the sweep.
pub fn sweep_noise(
    world: &WorldConfig,
    train_cfg: &TrainConfig,
    kind: SweepKind,
    policies: &[SweepPolicy],
    values: &[f64],
    episodes: usize,
    seed: u64,
) -> Result<SweepOutcome, AnalysisError> {
    let mut outcome = SweepOutcome::default();
    for policy in policies {
        // The channel kind is fixed per sweep; shapes must match the
        // checkpoint, so build the trainer with the first test value.
        let mut cfg = world.clone();
        cfg.channel = kind.channel_for(values.first().copied().unwrap_or(0.0));
        let mut trainer = match Maddpg::new(cfg, train_cfg.clone()) {
            Ok(t) => t,
            Err(e) => {
                outcome
                    .skipped
                    .push(format!("{}: {e}", policy.label));
                continue;
            }
        };
        if let Err(e) = trainer.load_checkpoint(&policy.checkpoint) {
            outcome.skipped.push(format!(
                "{} ({}): {e}",
                policy.label,
                policy.checkpoint.display()
            ));
            continue;
        }
        for &value in values {
            let mut world_at = trainer.world.clone();
            world_at.channel = kind.channel_for(value);
            let metrics = evaluate(
                &world_at,
                &trainer.agents,
                &EvalOptions::quick(episodes, seed),
            )?;
            outcome.rows.push(SweepRow {
                policy: policy.label.clone(),
                test_value: value,
                success_rate: metrics.success_rate,
                success_se: metrics.success_se,
                mean_steps: metrics.mean_steps,
                steps_se: metrics.steps_se,
                episodes: metrics.episodes,
                successes: (metrics.success_rate * metrics.episodes as f64).round() as usize,
            });
        }
    }
    Ok(outcome)
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "policy",
        "test_value",
        "success_rate",
        "success_se",
        "mean_steps",
        "steps_se",
        "episodes",
        "successes",
    ])?;
    for r in rows {
        w.write_record([
            r.policy.clone(),
            format!("{:.6}", r.test_value),
            format!("{:.6}", r.success_rate),
            format!("{:.6}", r.success_se),
            format!("{:.6}", r.mean_steps),
            format!("{:.6}", r.steps_se),
            r.episodes.to_string(),
            r.successes.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>, AnalysisError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let get = |i: usize| record.get(i).unwrap_or_default();
        let num = |i: usize| -> Result<f64, AnalysisError> {
            get(i).parse().map_err(|_| AnalysisError::BadField("sweep value"))
        };
        rows.push(SweepRow {
            policy: get(0).to_string(),
            test_value: num(1)?,
            success_rate: num(2)?,
            success_se: num(3)?,
            mean_steps: num(4)?,
            steps_se: num(5)?,
            episodes: get(6).parse().map_err(|_| AnalysisError::BadField("episodes"))?,
            successes: get(7).parse().map_err(|_| AnalysisError::BadField("successes"))?,
        });
    }
    Ok(rows)
}
