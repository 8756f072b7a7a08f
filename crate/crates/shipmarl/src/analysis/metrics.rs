//! The metrics record emitted by every evaluation-style command.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RateWithCount {
    pub rate: f64,
    pub episodes: usize,
    pub successes: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EncounterBreakdown {
    pub head_on: RateWithCount,
    pub crossing: RateWithCount,
    pub overtaking: RateWithCount,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CommStats {
    pub mean_norm_pre_meeting: f64,
    pub mean_norm_post_meeting: f64,
    pub steps_pre: usize,
    pub steps_post: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub scenario: String,
    pub policy: String,
    pub episodes: usize,
    pub seed: u64,
    pub success_rate: f64,
    pub success_se: f64,
    /// Steps to reach the goal, with failures counted at the episode cap.
    pub mean_steps: f64,
    pub steps_se: f64,
    pub mean_return: f64,
    pub return_se: f64,
    pub collision_rate: Option<f64>,
    pub per_encounter: Option<EncounterBreakdown>,
    /// Summed over both ships, averaged over episodes.
    pub mean_total_path_length: Option<f64>,
    pub mean_closest_approach: Option<f64>,
    pub comm: Option<CommStats>,
}

impl MetricsRecord {
    /// Structural sanity: rates in [0,1], nonnegative standard errors,
    /// encounter buckets partitioning the episode count.
    pub fn validate(&self) -> Result<(), String> {
        let rate_ok = |r: f64| (0.0..=1.0).contains(&r);
        if !rate_ok(self.success_rate) {
            return Err(format!("success_rate {} outside [0,1]", self.success_rate));
        }
        if self.success_se < 0.0 || self.steps_se < 0.0 || self.return_se < 0.0 {
            return Err("standard errors must be nonnegative".to_string());
        }
        if let Some(c) = self.collision_rate {
            if !rate_ok(c) {
                return Err(format!("collision_rate {c} outside [0,1]"));
            }
        }
        if let Some(b) = &self.per_encounter {
            for bucket in [&b.head_on, &b.crossing, &b.overtaking] {
                if bucket.successes > bucket.episodes {
                    return Err("bucket successes exceed episodes".to_string());
                }
                if bucket.episodes > 0 && !rate_ok(bucket.rate) {
                    return Err("bucket rate outside [0,1]".to_string());
                }
            }
            let total = b.head_on.episodes + b.crossing.episodes + b.overtaking.episodes;
            if total != self.episodes {
                return Err(format!(
                    "encounter buckets cover {total} of {} episodes",
                    self.episodes
                ));
            }
        }
        Ok(())
    }

    /// Weighted aggregate of the per-encounter buckets; must equal the
    /// overall rate when buckets exist.
    pub fn encounter_weighted_rate(&self) -> Option<f64> {
        self.per_encounter.as_ref().map(|b| {
            let num = b.head_on.successes + b.crossing.successes + b.overtaking.successes;
            num as f64 / self.episodes as f64
        })
    }
}
