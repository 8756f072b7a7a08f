//! Deterministic policy evaluation.
//!
//! Actors run greedily (no exploration noise), episodes get independent
//! seeded random streams, and episodes may be evaluated in parallel; the
//! aggregate is identical either way.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use std::path::PathBuf;

use crate::analysis::metrics::{CommStats, EncounterBreakdown, MetricsRecord, RateWithCount};
use crate::scenarios::{
    self,
    log::{EpisodeLogWriter, EpisodeSummary, LogRecord, StepRecord},
    Action, Observation, Scenario, WorldConfig,
};

use super::agents::AgentNets;
use super::MarlError;

#[derive(Clone, Debug)]
pub struct EvalOptions {
    pub episodes: usize,
    pub seed: u64,
    /// Write per-step episode logs (JSONL) here.
    pub log_path: Option<PathBuf>,
    pub parallel: bool,
}

impl EvalOptions {
    pub fn quick(episodes: usize, seed: u64) -> Self {
        Self {
            episodes,
            seed,
            log_path: None,
            parallel: true,
        }
    }
}

/// Anything that maps per-agent observations to a joint action; lets the
/// scripted baselines reuse the same episode runner and metrics.
/// `EpisodeState` carries whatever memory the policy needs within one
/// episode (e.g. PID integrators); it is rebuilt at every reset.
pub trait JointPolicy: Sync {
    type EpisodeState: Send;

    fn init_state(&self, cfg: &WorldConfig) -> Self::EpisodeState;

    fn act(
        &self,
        observations: &[Observation],
        world: &scenarios::WorldState,
        cfg: &WorldConfig,
        state: &mut Self::EpisodeState,
        episode_rng: &mut ChaCha12Rng,
    ) -> Result<Vec<Action>, MarlError>;

    fn name(&self) -> String;
}

/// Greedy actors from a trained agent set.
pub struct GreedyPolicy<'a>(pub &'a [AgentNets]);

impl JointPolicy for GreedyPolicy<'_> {
    type EpisodeState = ();

    fn init_state(&self, _cfg: &WorldConfig) {}

    fn act(
        &self,
        observations: &[Observation],
        _world: &scenarios::WorldState,
        _cfg: &WorldConfig,
        _state: &mut (),
        _rng: &mut ChaCha12Rng,
    ) -> Result<Vec<Action>, MarlError> {
        self.0
            .iter()
            .zip(observations)
            .map(|(agent, obs)| agent.act_greedy(obs).map_err(MarlError::from))
            .collect()
    }

    fn name(&self) -> String {
        "checkpoint".to_string()
    }
}

pub(crate) struct EpisodeOutput {
    pub summary: EpisodeSummary,
    pub steps: Vec<StepRecord>,
    pub success: bool,
    pub steps_to_goal: usize,
    /// Message norms split at the closest-approach step.
    pub norms_pre: Vec<f64>,
    pub norms_post: Vec<f64>,
}

fn splitmix(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn run_episode<P: JointPolicy + ?Sized>(
    world_cfg: &WorldConfig,
    policy: &P,
    episode: usize,
    seed: u64,
    keep_steps: bool,
) -> Result<EpisodeOutput, MarlError> {
    let mut rng = ChaCha12Rng::seed_from_u64(splitmix(seed, episode as u64));
    let mut ws = scenarios::reset(world_cfg, &mut rng)?;
    let mut observations = scenarios::observe_all(&ws, world_cfg)?;
    let mut summary = EpisodeSummary::begin(episode, &ws);
    let mut steps = Vec::new();
    let mut policy_state = policy.init_state(world_cfg);

    let mut reached = false;
    let mut steps_to_goal = world_cfg.max_steps;
    // (ship distance, per-agent sent norms) per step for the pre/post split.
    let mut distances = Vec::new();
    let mut norms = Vec::new();

    let mut t = 0usize;
    loop {
        let actions = policy.act(&observations, &ws, world_cfg, &mut policy_state, &mut rng)?;
        let out = scenarios::step_env(&ws, &actions, world_cfg, &mut rng)?;
        summary.absorb(&ws, &out);
        if keep_steps {
            steps.push(StepRecord::from_outcome(t, &actions, &out));
        }
        if let Some(d) = out.events.ship_distance {
            distances.push(d);
            let step_norms: Vec<f64> = out
                .events
                .messages_sent
                .iter()
                .flatten()
                .map(|m| m.norm())
                .collect();
            norms.push(step_norms);
        }
        if out.reached_goals && !reached {
            reached = true;
            steps_to_goal = out.world.step_index;
        }
        t += 1;
        observations = out.observations.clone();
        ws = out.world;
        if out.done {
            break;
        }
    }

    let success = match world_cfg.scenario {
        Scenario::Navigation => reached && summary.failure.is_none(),
        Scenario::Avoidance => reached && !summary.collision && summary.failure.is_none(),
    };
    summary.success = success;

    // Split message norms at the closest approach.
    let mut norms_pre = Vec::new();
    let mut norms_post = Vec::new();
    if !distances.is_empty() {
        let closest = distances
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite distances"))
            .map(|(i, _)| i)
            .unwrap_or(0);
        for (i, step_norms) in norms.iter().enumerate() {
            if i <= closest {
                norms_pre.extend(step_norms);
            } else {
                norms_post.extend(step_norms);
            }
        }
    }

    Ok(EpisodeOutput {
        summary,
        steps,
        success,
        steps_to_goal: if success { steps_to_goal } else { world_cfg.max_steps },
        norms_pre,
        norms_post,
    })
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub(crate) fn aggregate(
    world_cfg: &WorldConfig,
    policy_name: String,
    opts: &EvalOptions,
    episodes: Vec<EpisodeOutput>,
) -> Result<MetricsRecord, MarlError> {
    let n = episodes.len();
    let successes = episodes.iter().filter(|e| e.success).count();
    let success_rate = successes as f64 / n as f64;
    let success_se = (success_rate * (1.0 - success_rate) / n as f64).sqrt();

    let steps: Vec<f64> = episodes.iter().map(|e| e.steps_to_goal as f64).collect();
    let (mean_steps, steps_se) = mean_and_se(&steps);
    let returns: Vec<f64> = episodes
        .iter()
        .map(|e| e.summary.total_return)
        .collect();
    let (mean_return, return_se) = mean_and_se(&returns);

    let avoidance = world_cfg.scenario == Scenario::Avoidance;
    let collision_rate = avoidance.then(|| {
        episodes.iter().filter(|e| e.summary.collision).count() as f64 / n as f64
    });

    let per_encounter = avoidance.then(|| {
        let mut buckets = [(0usize, 0usize); 3];
        for e in &episodes {
            if let Some(enc) = e.summary.encounter {
                let b = &mut buckets[enc.family()];
                b.0 += 1;
                b.1 += usize::from(e.success);
            }
        }
        let mk = |(episodes, successes): (usize, usize)| RateWithCount {
            rate: if episodes > 0 {
                successes as f64 / episodes as f64
            } else {
                0.0
            },
            episodes,
            successes,
        };
        EncounterBreakdown {
            head_on: mk(buckets[0]),
            crossing: mk(buckets[1]),
            overtaking: mk(buckets[2]),
        }
    });

    let mean_total_path_length = avoidance.then(|| {
        episodes
            .iter()
            .map(|e| e.summary.path_lengths.iter().sum::<f64>())
            .sum::<f64>()
            / n as f64
    });
    let mean_closest_approach = avoidance.then(|| {
        let vals: Vec<f64> = episodes
            .iter()
            .filter_map(|e| e.summary.closest_approach)
            .collect();
        vals.iter().sum::<f64>() / vals.len().max(1) as f64
    });

    let comm = avoidance.then(|| {
        let pre: Vec<f64> = episodes.iter().flat_map(|e| e.norms_pre.iter().copied()).collect();
        let post: Vec<f64> = episodes
            .iter()
            .flat_map(|e| e.norms_post.iter().copied())
            .collect();
        CommStats {
            mean_norm_pre_meeting: pre.iter().sum::<f64>() / pre.len().max(1) as f64,
            mean_norm_post_meeting: post.iter().sum::<f64>() / post.len().max(1) as f64,
            steps_pre: pre.len(),
            steps_post: post.len(),
        }
    });

    if let Some(path) = &opts.log_path {
        let mut writer = EpisodeLogWriter::create(path)?;
        for e in &episodes {
            for s in &e.steps {
                writer.write(&LogRecord::Step(s.clone()))?;
            }
            writer.write(&LogRecord::Summary(e.summary.clone()))?;
        }
        writer.finish()?;
    }

    let record = MetricsRecord {
        scenario: match world_cfg.scenario {
            Scenario::Navigation => "navigation".to_string(),
            Scenario::Avoidance => "avoidance".to_string(),
        },
        policy: policy_name,
        episodes: n,
        seed: opts.seed,
        success_rate,
        success_se,
        mean_steps,
        steps_se,
        mean_return,
        return_se,
        collision_rate,
        per_encounter,
        mean_total_path_length,
        mean_closest_approach,
        comm,
    };
    record
        .validate()
        .map_err(MarlError::Config)?;
    Ok(record)
}

/// Runs `opts.episodes` deterministic episodes of any joint policy and
/// aggregates the standard metrics record.
pub fn evaluate_policy<P: JointPolicy + ?Sized>(
    world_cfg: &WorldConfig,
    policy: &P,
    opts: &EvalOptions,
) -> Result<MetricsRecord, MarlError> {
    if opts.episodes == 0 {
        return Err(MarlError::Config("evaluation needs >= 1 episode".into()));
    }
    let keep_steps = opts.log_path.is_some();
    let episodes: Result<Vec<EpisodeOutput>, MarlError> = if opts.parallel {
        (0..opts.episodes)
            .into_par_iter()
            .map(|e| run_episode(world_cfg, policy, e, opts.seed, keep_steps))
            .collect()
    } else {
        (0..opts.episodes)
            .map(|e| run_episode(world_cfg, policy, e, opts.seed, keep_steps))
            .collect()
    };
    aggregate(world_cfg, policy.name(), opts, episodes?)
}

/// Deterministic evaluation of trained agents.
pub fn evaluate(
    world_cfg: &WorldConfig,
    agents: &[AgentNets],
    opts: &EvalOptions,
) -> Result<MetricsRecord, MarlError> {
    evaluate_policy(world_cfg, &GreedyPolicy(agents), opts)
}
