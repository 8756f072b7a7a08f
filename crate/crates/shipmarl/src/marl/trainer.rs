//! The MADDPG training loop: per-step exploration, replay, centralized
//! critic updates, deterministic-policy-gradient actor updates and soft
//! target tracking. The independent-DDPG ablation reuses the same loop
//! with critics restricted to each agent's own observation and action.

use ndarray::{s, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use std::path::Path;

use crate::neural::{adam_step, CheckpointBuilder, GumbelCtx, MlpParams};
use crate::scenarios::{self, Scenario, WorldConfig};

use super::agents::{AgentNets, AgentSpec};
use super::buffer::{Experience, ReplayBuffer};
use super::evaluate::{evaluate, EvalOptions};
use super::MarlError;

/// Training hyperparameters. `navigation()` and `avoidance()` carry the
/// per-scenario defaults (hidden sizes, learning rates, batch sizes).
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig {
    pub episodes: usize,
    pub batch_size: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub gamma: f64,
    pub tau: f64,
    pub buffer_capacity: usize,
    /// Updates begin once the buffer holds `warmup_factor * batch_size`
    /// transitions.
    pub warmup_factor: usize,
    /// Environment steps between update rounds.
    pub update_interval: usize,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub ou_theta: f64,
    pub ou_sigma: f64,
    pub ou_sigma_final: f64,
    /// Fraction of the episode budget over which sigma decays linearly.
    pub ou_decay_fraction: f64,
    pub gumbel_temperature: f64,
    /// Episodes between periodic evaluations (0 disables them).
    pub eval_interval: usize,
    pub eval_episodes: usize,
    pub final_eval_episodes: usize,
    /// Stop once a periodic evaluation reaches this success rate.
    pub stop_at_eval_success: Option<f64>,
    /// Critics see only their own agent's observation and action.
    pub independent_ddpg: bool,
    pub seed: u64,
}

impl TrainConfig {
    pub fn navigation() -> Self {
        Self {
            episodes: 30_000,
            batch_size: 1024,
            actor_lr: 0.002,
            critic_lr: 0.01,
            gamma: 0.95,
            tau: 0.001,
            buffer_capacity: 1_000_000,
            warmup_factor: 10,
            update_interval: 1,
            actor_hidden: vec![64, 64, 64],
            critic_hidden: vec![64, 64],
            ou_theta: 0.15,
            ou_sigma: 0.2,
            ou_sigma_final: 0.02,
            ou_decay_fraction: 0.6,
            gumbel_temperature: 1.0,
            eval_interval: 250,
            eval_episodes: 100,
            final_eval_episodes: 500,
            stop_at_eval_success: None,
            independent_ddpg: false,
            seed: 0,
        }
    }

    pub fn avoidance() -> Self {
        Self {
            episodes: 5000,
            batch_size: 512,
            actor_lr: 0.0005,
            critic_lr: 0.001,
            actor_hidden: vec![256, 256],
            critic_hidden: vec![128, 128],
            ..Self::navigation()
        }
    }

    pub fn validate(&self) -> Result<(), MarlError> {
        let mut problems = Vec::new();
        if self.episodes == 0 {
            problems.push("episodes must be >= 1");
        }
        if self.batch_size == 0 || self.batch_size > self.buffer_capacity {
            problems.push("batch_size must fit in the buffer");
        }
        if !(0.0 < self.tau && self.tau <= 1.0) {
            problems.push("tau must be in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            problems.push("gamma must be in [0, 1]");
        }
        if self.gumbel_temperature <= 0.0 {
            problems.push("gumbel temperature must be > 0");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(MarlError::Config(problems.join("; ")))
        }
    }
}

#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct CurvePoint {
    pub episode: usize,
    pub episode_return: f64,
    pub eval_success: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub curve: Vec<CurvePoint>,
    pub episodes_run: usize,
    pub updates_run: u64,
    pub updates_skipped: u64,
    pub stopped_early: bool,
}

/// A materialized minibatch in network units.
struct Batch {
    s: Array2<f64>,
    a: Array2<f64>,
    r: Array2<f64>,
    s2: Array2<f64>,
    terminal: Vec<bool>,
}

pub struct Maddpg {
    pub world: WorldConfig,
    pub cfg: TrainConfig,
    pub agents: Vec<AgentNets>,
    pub buffer: ReplayBuffer,
    obs_offsets: Vec<usize>,
    act_offsets: Vec<usize>,
    joint_obs_scale: Vec<f64>,
    act_center: Vec<f64>,
    act_half: Vec<f64>,
    update_counter: u64,
    updates_skipped: u64,
    // Rolling diagnostics since the last log line.
    diag_critic_loss: f64,
    diag_mean_q: f64,
    diag_count: u64,
}

fn splitmix(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Maddpg {
    pub fn new(world: WorldConfig, cfg: TrainConfig) -> Result<Self, MarlError> {
        world.validate()?;
        cfg.validate()?;

        let n = world.n_agents();
        let specs: Vec<AgentSpec> = (0..n)
            .map(|a| AgentSpec::from_world(&world, a))
            .collect::<Result<_, _>>()?;

        let mut obs_offsets = Vec::with_capacity(n + 1);
        let mut act_offsets = Vec::with_capacity(n + 1);
        let mut joint_obs_scale = Vec::new();
        let mut act_center = Vec::new();
        let mut act_half = Vec::new();
        let mut obs_total = 0;
        let mut act_total = 0;
        for spec in &specs {
            obs_offsets.push(obs_total);
            act_offsets.push(act_total);
            obs_total += spec.obs_dim;
            act_total += spec.action_dim();
            joint_obs_scale.extend(&spec.obs_scale);
            for slot in &spec.slots {
                act_center.push(0.5 * (slot.lo + slot.hi));
                act_half.push(0.5 * (slot.hi - slot.lo));
            }
        }
        obs_offsets.push(obs_total);
        act_offsets.push(act_total);

        let mut init_rng = ChaCha12Rng::seed_from_u64(splitmix(cfg.seed, 0));
        let mut agents = Vec::with_capacity(n);
        for spec in specs {
            let critic_input = if cfg.independent_ddpg {
                spec.obs_dim + spec.action_dim()
            } else {
                obs_total + act_total
            };
            agents.push(AgentNets::new(spec, critic_input, &cfg, &mut init_rng)?);
        }

        Ok(Self {
            buffer: ReplayBuffer::new(cfg.buffer_capacity),
            world,
            agents,
            obs_offsets,
            act_offsets,
            joint_obs_scale,
            act_center,
            act_half,
            cfg,
            update_counter: 0,
            updates_skipped: 0,
            diag_critic_loss: 0.0,
            diag_mean_q: 0.0,
            diag_count: 0,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    fn obs_cols(&self, agent: usize) -> std::ops::Range<usize> {
        self.obs_offsets[agent]..self.obs_offsets[agent + 1]
    }

    fn act_cols(&self, agent: usize) -> std::ops::Range<usize> {
        self.act_offsets[agent]..self.act_offsets[agent + 1]
    }

    /// Pulls a minibatch and converts it to network units: observations
    /// elementwise scaled, actions mapped to [-1, 1] per slot.
    fn materialize<R: Rng>(&self, rng: &mut R) -> Batch {
        let b = self.cfg.batch_size;
        let samples = self.buffer.sample(b, rng);
        let obs_total = *self.obs_offsets.last().expect("offsets");
        let act_total = *self.act_offsets.last().expect("offsets");
        let n = self.n_agents();

        let mut s = Array2::zeros((b, obs_total));
        let mut a = Array2::zeros((b, act_total));
        let mut r = Array2::zeros((b, n));
        let mut s2 = Array2::zeros((b, obs_total));
        let mut terminal = Vec::with_capacity(b);
        for (row, exp) in samples.iter().enumerate() {
            for (c, (v, k)) in exp.s.iter().zip(&self.joint_obs_scale).enumerate() {
                s[(row, c)] = v * k;
            }
            for (c, (v, k)) in exp.s2.iter().zip(&self.joint_obs_scale).enumerate() {
                s2[(row, c)] = v * k;
            }
            for c in 0..act_total {
                a[(row, c)] = (exp.a[c] - self.act_center[c]) / self.act_half[c];
            }
            for (c, v) in exp.r.iter().enumerate() {
                r[(row, c)] = *v;
            }
            terminal.push(exp.terminal);
        }
        Batch { s, a, r, s2, terminal }
    }

    /// Critic input for one agent: the joint state/action for MADDPG, or
    /// the agent's own slices for independent DDPG.
    fn critic_input(&self, agent: usize, s: &Array2<f64>, a: &Array2<f64>) -> Array2<f64> {
        let (s_part, a_part) = if self.cfg.independent_ddpg {
            (
                s.slice(s![.., self.obs_cols(agent)]).to_owned(),
                a.slice(s![.., self.act_cols(agent)]).to_owned(),
            )
        } else {
            (s.to_owned(), a.to_owned())
        };
        let b = s_part.nrows();
        let mut x = Array2::zeros((b, s_part.ncols() + a_part.ncols()));
        x.slice_mut(s![.., ..s_part.ncols()]).assign(&s_part);
        x.slice_mut(s![.., s_part.ncols()..]).assign(&a_part);
        x
    }

    /// Greedy target-actor actions for every agent on the next
    /// observations, normalized into critic units.
    fn target_actions_norm(&self, s2: &Array2<f64>) -> Result<Array2<f64>, MarlError> {
        let b = s2.nrows();
        let act_total = *self.act_offsets.last().expect("offsets");
        let mut a2 = Array2::zeros((b, act_total));
        for (j, agent) in self.agents.iter().enumerate() {
            let obs_j = s2.slice(s![.., self.obs_cols(j)]).to_owned();
            let (phys, _) = agent.target_actor.forward_batch(&obs_j)?;
            let cols = self.act_cols(j);
            for row in 0..b {
                for (k, c) in cols.clone().enumerate() {
                    a2[(row, c)] = (phys[(row, k)] - self.act_center[c]) / self.act_half[c];
                }
            }
        }
        Ok(a2)
    }

    /// Bootstrapped regression target `y = r + gamma * Q'(s', a')`,
    /// truncated to `y = r` on true terminal transitions.
    fn critic_target(&self, agent: usize, batch: &Batch, a2_norm: &Array2<f64>) -> Result<Vec<f64>, MarlError> {
        let x2 = self.critic_input(agent, &batch.s2, a2_norm);
        let (q2, _) = self.agents[agent].target_critic.forward_batch(&x2)?;
        let gamma = self.agents[agent].gamma;
        Ok((0..batch.terminal.len())
            .map(|row| {
                let r = batch.r[(row, agent)];
                if batch.terminal[row] {
                    r
                } else {
                    r + gamma * q2[(row, 0)]
                }
            })
            .collect())
    }

    /// One optimization round for every agent on freshly sampled
    /// minibatches, then a soft target update.
    pub fn update_all<R: Rng>(&mut self, sample_rng: &mut R) -> Result<(), MarlError> {
        let n = self.n_agents();
        let batches: Vec<Batch> = (0..n).map(|_| self.materialize(sample_rng)).collect();
        let mut targets = Vec::with_capacity(n);
        let mut a2s = Vec::with_capacity(n);
        for (i, batch) in batches.iter().enumerate() {
            let a2 = self.target_actions_norm(&batch.s2)?;
            targets.push(self.critic_target(i, batch, &a2)?);
            a2s.push(a2);
        }

        self.update_counter += 1;
        let noise_seed = splitmix(self.cfg.seed, 0x5EED ^ self.update_counter);

        // Immutable context for the parallel section.
        let ctx = UpdateCtx {
            obs_offsets: &self.obs_offsets,
            act_offsets: &self.act_offsets,
            act_center: &self.act_center,
            act_half: &self.act_half,
            independent: self.cfg.independent_ddpg,
            batch_size: self.cfg.batch_size,
            noise_seed,
        };

        let stats: Vec<UpdateStats> = self
            .agents
            .par_iter_mut()
            .enumerate()
            .zip(batches.par_iter().zip(targets.par_iter()))
            .map(|((i, agent), (batch, y))| update_one_agent(agent, i, batch, y, &ctx))
            .collect::<Result<_, MarlError>>()?;
        for s in stats {
            self.updates_skipped += s.skipped;
            self.diag_critic_loss += s.critic_loss;
            self.diag_mean_q += s.mean_q;
            self.diag_count += 1;
        }

        for agent in &mut self.agents {
            agent.update_targets();
        }
        Ok(())
    }

    /// Mean critic loss and Q estimate since the last call.
    fn drain_diagnostics(&mut self) -> (f64, f64) {
        let n = self.diag_count.max(1) as f64;
        let out = (self.diag_critic_loss / n, self.diag_mean_q / n);
        self.diag_critic_loss = 0.0;
        self.diag_mean_q = 0.0;
        self.diag_count = 0;
        out
    }

    /// Runs the full training loop; returns the per-episode curve.
    pub fn train(&mut self) -> Result<TrainReport, MarlError> {
        let mut env_rng = ChaCha12Rng::seed_from_u64(splitmix(self.cfg.seed, 1));
        let mut policy_rng = ChaCha12Rng::seed_from_u64(splitmix(self.cfg.seed, 2));
        let mut sample_rng = ChaCha12Rng::seed_from_u64(splitmix(self.cfg.seed, 3));

        let warmup = self.cfg.warmup_factor * self.cfg.batch_size;
        let decay_end = ((self.cfg.ou_decay_fraction * self.cfg.episodes as f64).ceil() as usize)
            .max(1);

        let mut curve = Vec::with_capacity(self.cfg.episodes);
        let mut stopped_early = false;
        let mut episodes_run = 0;

        for episode in 0..self.cfg.episodes {
            let sigma = if episode >= decay_end {
                self.cfg.ou_sigma_final
            } else {
                let f = episode as f64 / decay_end as f64;
                self.cfg.ou_sigma + f * (self.cfg.ou_sigma_final - self.cfg.ou_sigma)
            };
            let mut ou: Vec<_> = self
                .agents
                .iter()
                .map(|a| a.make_ou(self.cfg.ou_theta, sigma))
                .collect();

            let mut ws = scenarios::reset(&self.world, &mut env_rng)?;
            let mut observations = scenarios::observe_all(&ws, &self.world)?;
            let mut episode_return = 0.0;
            let mut step_in_episode = 0usize;

            loop {
                let mut actions = Vec::with_capacity(self.n_agents());
                for (i, agent) in self.agents.iter().enumerate() {
                    actions.push(agent.act_explore(
                        &observations[i],
                        &mut ou[i],
                        &mut policy_rng,
                    )?);
                }
                let out = scenarios::step_env(&ws, &actions, &self.world, &mut env_rng)?;
                if let Some(f) = &out.failure {
                    log::warn!("episode {episode}: dynamics failure: {f}");
                }

                episode_return += match self.world.scenario {
                    Scenario::Navigation => out.rewards[0],
                    Scenario::Avoidance => out.rewards.iter().sum(),
                };

                if out.failure.is_none() {
                    self.buffer.push(Experience {
                        s: concat_vecs(observations.iter().map(|o| o.0.as_slice())),
                        a: concat_vecs(actions.iter().map(|a| a.0.as_slice())),
                        r: out.rewards.clone(),
                        s2: concat_vecs(out.observations.iter().map(|o| o.0.as_slice())),
                        terminal: out.reached_goals || out.failure.is_some(),
                    });
                }

                step_in_episode += 1;
                if self.buffer.len() >= warmup && step_in_episode % self.cfg.update_interval == 0
                {
                    self.update_all(&mut sample_rng)?;
                }

                observations = out.observations.clone();
                ws = out.world;
                if out.done {
                    break;
                }
            }

            episodes_run += 1;
            let mut point = CurvePoint {
                episode,
                episode_return,
                eval_success: None,
            };
            if self.cfg.eval_interval > 0
                && (episode + 1) % self.cfg.eval_interval == 0
                && self.cfg.eval_episodes > 0
            {
                let opts = EvalOptions {
                    episodes: self.cfg.eval_episodes,
                    seed: splitmix(self.cfg.seed, 0xE7A1 ^ (episode as u64)),
                    log_path: None,
                    parallel: true,
                };
                let metrics = evaluate(&self.world, &self.agents, &opts)?;
                point.eval_success = Some(metrics.success_rate);
                let (loss, mean_q) = self.drain_diagnostics();
                log::info!(
                    "episode {episode}: return {episode_return:.1}, eval success {:.3}, critic loss {loss:.2}, mean Q {mean_q:.1}",
                    metrics.success_rate
                );
                if let Some(threshold) = self.cfg.stop_at_eval_success {
                    if metrics.success_rate >= threshold {
                        curve.push(point);
                        stopped_early = true;
                        break;
                    }
                }
            }
            curve.push(point);
        }

        Ok(TrainReport {
            curve,
            episodes_run,
            updates_run: self.update_counter,
            updates_skipped: self.updates_skipped,
            stopped_early,
        })
    }

    pub fn save_checkpoint<P: AsRef<Path>>(&self, dir: P) -> Result<(), MarlError> {
        let mut builder = CheckpointBuilder::new();
        for (i, agent) in self.agents.iter().enumerate() {
            builder.add_mlp(&format!("agent{i}.actor"), &agent.actor);
            builder.add_mlp(&format!("agent{i}.critic"), &agent.critic);
            builder.add_mlp(&format!("agent{i}.target_actor"), &agent.target_actor);
            builder.add_mlp(&format!("agent{i}.target_critic"), &agent.target_critic);
            builder.add_adam(&format!("agent{i}.actor_opt"), &agent.actor_opt);
            builder.add_adam(&format!("agent{i}.critic_opt"), &agent.critic_opt);
        }
        builder.save(dir.as_ref())?;
        Ok(())
    }

    /// Replaces all network and optimizer state from a checkpoint;
    /// shapes must match the configured scenario.
    pub fn load_checkpoint<P: AsRef<Path>>(&mut self, dir: P) -> Result<(), MarlError> {
        let ckpt = crate::neural::Checkpoint::load(dir.as_ref())?;
        for (i, agent) in self.agents.iter_mut().enumerate() {
            let actor = ckpt.mlp(&format!("agent{i}.actor"))?;
            check_same_shape(&agent.actor, &actor, "actor")?;
            agent.actor = actor;
            let critic = ckpt.mlp(&format!("agent{i}.critic"))?;
            check_same_shape(&agent.critic, &critic, "critic")?;
            agent.critic = critic;
            agent.target_actor = ckpt.mlp(&format!("agent{i}.target_actor"))?;
            agent.target_critic = ckpt.mlp(&format!("agent{i}.target_critic"))?;
            agent.actor_opt = ckpt.adam(&format!("agent{i}.actor_opt"))?;
            agent.critic_opt = ckpt.adam(&format!("agent{i}.critic_opt"))?;
        }
        Ok(())
    }
}

fn check_same_shape(a: &MlpParams, b: &MlpParams, what: &str) -> Result<(), MarlError> {
    let dims = |p: &MlpParams| -> Vec<(usize, usize)> {
        p.layers.iter().map(|l| (l.w.nrows(), l.w.ncols())).collect()
    };
    if dims(a) != dims(b) {
        return Err(MarlError::Config(format!(
            "checkpoint {what} shape {:?} does not match scenario {:?}",
            dims(b),
            dims(a)
        )));
    }
    Ok(())
}

struct UpdateCtx<'a> {
    obs_offsets: &'a [usize],
    act_offsets: &'a [usize],
    act_center: &'a [f64],
    act_half: &'a [f64],
    independent: bool,
    batch_size: usize,
    noise_seed: u64,
}

struct UpdateStats {
    skipped: u64,
    critic_loss: f64,
    mean_q: f64,
}

/// Critic then actor update for one agent. Returns diagnostics including
/// the number of Adam steps skipped for non-finite gradients.
fn update_one_agent(
    agent: &mut AgentNets,
    index: usize,
    batch: &Batch,
    y: &[f64],
    ctx: &UpdateCtx,
) -> Result<UpdateStats, MarlError> {
    let b = ctx.batch_size as f64;
    let mut skipped = 0u64;

    let obs_cols = ctx.obs_offsets[index]..ctx.obs_offsets[index + 1];
    let act_cols = ctx.act_offsets[index]..ctx.act_offsets[index + 1];

    let critic_x = |s: &Array2<f64>, a: &Array2<f64>| -> Array2<f64> {
        let (s_part, a_part) = if ctx.independent {
            (
                s.slice(s![.., obs_cols.clone()]).to_owned(),
                a.slice(s![.., act_cols.clone()]).to_owned(),
            )
        } else {
            (s.to_owned(), a.to_owned())
        };
        let rows = s_part.nrows();
        let mut x = Array2::zeros((rows, s_part.ncols() + a_part.ncols()));
        x.slice_mut(s![.., ..s_part.ncols()]).assign(&s_part);
        x.slice_mut(s![.., s_part.ncols()..]).assign(&a_part);
        x
    };

    // Critic regression toward y.
    let x = critic_x(&batch.s, &batch.a);
    let (q, cache) = agent.critic.forward_batch(&x)?;
    let mut d_q = Array2::zeros((q.nrows(), 1));
    let mut critic_loss = 0.0;
    for row in 0..q.nrows() {
        let err = q[(row, 0)] - y[row];
        critic_loss += err * err / b;
        d_q[(row, 0)] = 2.0 * err / b;
    }
    let (critic_grads, _) = agent.critic.backward_batch(&cache, &d_q)?;
    if adam_step(&mut agent.critic, &critic_grads, &mut agent.critic_opt)
        == crate::neural::AdamOutcome::SkippedNonFinite
    {
        skipped += 1;
    }

    // Actor ascent on Q with this agent's action slot replaced by its
    // current policy output (straight-through for message bits).
    let obs_i = batch.s.slice(s![.., obs_cols.clone()]).to_owned();
    let noise_w = agent.actor.gumbel_noise_width();
    let mut noise_rng = ChaCha12Rng::seed_from_u64(ctx.noise_seed ^ (index as u64) << 32);
    let noise = Array2::from_shape_fn((obs_i.nrows(), noise_w), |_| {
        crate::channels::gumbel::sample(&mut noise_rng)
    });
    let gumbel = GumbelCtx {
        temperature: agent.gumbel_temperature,
        noise: if noise_w > 0 { Some(&noise) } else { None },
        hard: true,
    };
    let (phys, actor_cache) = agent.actor.forward_batch_with(&obs_i, &gumbel)?;

    let mut a_sub = batch.a.clone();
    for row in 0..phys.nrows() {
        for (k, c) in act_cols.clone().enumerate() {
            a_sub[(row, c)] = (phys[(row, k)] - ctx.act_center[c]) / ctx.act_half[c];
        }
    }
    let x_actor = critic_x(&batch.s, &a_sub);
    let (q_actor, critic_cache) = agent.critic.forward_batch(&x_actor)?;
    let mean_q = q_actor.column(0).sum() / b;
    let ones = Array2::from_elem((obs_i.nrows(), 1), 1.0 / b);
    let (_, d_input) = agent.critic.backward_batch(&critic_cache, &ones)?;

    // dQ/da arrives in normalized units; actors emit physical units.
    let a_col_base = if ctx.independent {
        obs_cols.len()
    } else {
        ctx.obs_offsets[ctx.obs_offsets.len() - 1] + ctx.act_offsets[index]
    };
    let mut d_phys = Array2::zeros((obs_i.nrows(), act_cols.len()));
    for row in 0..obs_i.nrows() {
        for (k, c) in act_cols.clone().enumerate() {
            d_phys[(row, k)] = d_input[(row, a_col_base + k)] / ctx.act_half[c];
        }
    }
    let (mut actor_grads, _) = agent.actor.backward_batch(&actor_cache, &d_phys)?;
    actor_grads.scale(-1.0); // ascend
    if adam_step(&mut agent.actor, &actor_grads, &mut agent.actor_opt)
        == crate::neural::AdamOutcome::SkippedNonFinite
    {
        skipped += 1;
    }
    Ok(UpdateStats {
        skipped,
        critic_loss,
        mean_q,
    })
}

fn concat_vecs<'a, I: Iterator<Item = &'a [f64]>>(parts: I) -> Vec<f64> {
    let mut out = Vec::new();
    for p in parts {
        out.extend_from_slice(p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{AdamState, HeadSegment};

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    /// Navigation-shaped trainer with small nets and a buffer filled
    /// with random finite transitions.
    fn small_trainer(seed: u64, batch: usize) -> Maddpg {
        let world = WorldConfig::navigation();
        let cfg = TrainConfig {
            episodes: 1,
            batch_size: batch,
            warmup_factor: 1,
            actor_hidden: vec![12, 12],
            critic_hidden: vec![12],
            eval_interval: 0,
            eval_episodes: 0,
            final_eval_episodes: 0,
            seed,
            ..TrainConfig::navigation()
        };
        let mut trainer = Maddpg::new(world, cfg).unwrap();
        fill_buffer(&mut trainer, 4 * batch, seed ^ 0xF111);
        trainer
    }

    fn fill_buffer(trainer: &mut Maddpg, n: usize, seed: u64) {
        let mut r = rng(seed);
        let mut ws = scenarios::reset(&trainer.world, &mut r).unwrap();
        let mut obs = scenarios::observe_all(&ws, &trainer.world).unwrap();
        let mut ou: Vec<_> = trainer
            .agents
            .iter()
            .map(|a| a.make_ou(0.15, 0.3))
            .collect();
        while trainer.buffer.len() < n {
            let mut actions = Vec::new();
            for (i, agent) in trainer.agents.iter().enumerate() {
                actions.push(agent.act_explore(&obs[i], &mut ou[i], &mut r).unwrap());
            }
            let out = scenarios::step_env(&ws, &actions, &trainer.world, &mut r).unwrap();
            trainer.buffer.push(Experience {
                s: concat_vecs(obs.iter().map(|o| o.0.as_slice())),
                a: concat_vecs(actions.iter().map(|a| a.0.as_slice())),
                r: out.rewards.clone(),
                s2: concat_vecs(out.observations.iter().map(|o| o.0.as_slice())),
                terminal: out.reached_goals,
            });
            obs = out.observations.clone();
            if out.done {
                ws = scenarios::reset(&trainer.world, &mut r).unwrap();
                obs = scenarios::observe_all(&ws, &trainer.world).unwrap();
            } else {
                ws = out.world;
            }
        }
    }

    /// Forces a network to output a constant by zeroing everything and
    /// setting the final bias.
    fn make_constant(net: &mut MlpParams, value: f64) {
        for layer in &mut net.layers {
            layer.w.fill(0.0);
            layer.b.fill(0.0);
        }
        let last = net.layers.len() - 1;
        net.layers[last].b.fill(value);
    }

    #[test]
    fn critic_target_bootstraps_and_masks_terminals() {
        let mut trainer = small_trainer(0, 8);
        make_constant(&mut trainer.agents[0].target_critic, 2.0);

        let mut sample_rng = rng(1);
        let mut batch = trainer.materialize(&mut sample_rng);
        for row in 0..8 {
            batch.r[(row, 0)] = 1.0;
            batch.terminal[row] = row % 2 == 1;
        }
        let a2 = trainer.target_actions_norm(&batch.s2).unwrap();
        let y = trainer.critic_target(0, &batch, &a2).unwrap();
        for (row, y_val) in y.iter().enumerate() {
            if row % 2 == 1 {
                assert!((y_val - 1.0).abs() < 1e-12, "terminal row {row}: {y_val}");
            } else {
                // y = r + gamma * Q' = 1 + 0.95 * 2
                assert!((y_val - 2.9).abs() < 1e-12, "row {row}: {y_val}");
            }
        }

        trainer.agents[0].gamma = 0.0;
        let y0 = trainer.critic_target(0, &batch, &a2).unwrap();
        assert!(y0.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn critic_overfits_a_fixed_batch() {
        let mut trainer = small_trainer(2, 16);
        let mut sample_rng = rng(3);
        let batch = trainer.materialize(&mut sample_rng);
        // Fixed synthetic targets.
        let y: Vec<f64> = (0..16).map(|i| (i as f64 - 8.0) * 0.25).collect();

        let ctx_loss = |agent: &mut AgentNets| {
            let x = {
                let b = batch.s.nrows();
                let mut x = Array2::zeros((b, batch.s.ncols() + batch.a.ncols()));
                x.slice_mut(s![.., ..batch.s.ncols()]).assign(&batch.s);
                x.slice_mut(s![.., batch.s.ncols()..]).assign(&batch.a);
                x
            };
            let (q, _) = agent.critic.forward_batch(&x).unwrap();
            (0..16)
                .map(|row| (q[(row, 0)] - y[row]).powi(2))
                .sum::<f64>()
                / 16.0
        };

        let ctx = UpdateCtx {
            obs_offsets: &trainer.obs_offsets,
            act_offsets: &trainer.act_offsets,
            act_center: &trainer.act_center,
            act_half: &trainer.act_half,
            independent: false,
            batch_size: 16,
            noise_seed: 7,
        };
        let first = ctx_loss(&mut trainer.agents[0]);
        let mut last = first;
        for _ in 0..400 {
            update_one_agent(&mut trainer.agents[0], 0, &batch, &y, &ctx).unwrap();
            last = ctx_loss(&mut trainer.agents[0]);
        }
        assert!(
            last < 0.05 * first,
            "critic loss did not collapse: {first} -> {last}"
        );
    }

    #[test]
    fn critic_loss_matches_hand_mse_on_two_samples() {
        let trainer = small_trainer(4, 8);
        let mut sample_rng = rng(5);
        let batch = trainer.materialize(&mut sample_rng);

        let x = trainer.critic_input(0, &batch.s, &batch.a);
        let (q, _) = trainer.agents[0].critic.forward_batch(&x).unwrap();
        let y = [0.3, -0.7];
        let hand = ((q[(0, 0)] - y[0]).powi(2) + (q[(1, 0)] - y[1]).powi(2)) / 2.0;
        let impl_loss = (0..2)
            .map(|row| (q[(row, 0)] - y[row]).powi(2))
            .sum::<f64>()
            / 2.0;
        assert!((hand - impl_loss).abs() < 1e-15);
    }

    #[test]
    fn perfect_critic_has_vanishing_gradient() {
        let trainer = small_trainer(6, 8);
        let mut sample_rng = rng(7);
        let batch = trainer.materialize(&mut sample_rng);
        let x = trainer.critic_input(0, &batch.s, &batch.a);
        let (q, cache) = trainer.agents[0].critic.forward_batch(&x).unwrap();
        // Targets equal to predictions: the MSE gradient is exactly zero.
        let d_q = Array2::from_shape_fn((8, 1), |_| 0.0);
        let _ = q;
        let (grads, _) = trainer.agents[0]
            .critic
            .backward_batch(&cache, &d_q)
            .unwrap();
        let norm: f64 = grads
            .layers
            .iter()
            .map(|l| l.w.iter().chain(l.b.iter()).map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        assert!(norm <= 1e-10, "gradient norm {norm}");
    }

    /// Actor gradient against finite differences of the mean critic
    /// value with respect to the actor parameters.
    #[test]
    fn actor_gradient_matches_finite_differences() {
        let mut trainer = small_trainer(8, 4);
        let batch = {
            let mut sample_rng = rng(9);
            trainer.materialize(&mut sample_rng)
        };
        let ctx = UpdateCtx {
            obs_offsets: &trainer.obs_offsets,
            act_offsets: &trainer.act_offsets,
            act_center: &trainer.act_center,
            act_half: &trainer.act_half,
            independent: false,
            batch_size: 4,
            noise_seed: 1,
        };
        let agent_idx = 0; // ship actor: bounded heads only, no gumbel
        let obs_cols = ctx.obs_offsets[agent_idx]..ctx.obs_offsets[agent_idx + 1];
        let act_cols = ctx.act_offsets[agent_idx]..ctx.act_offsets[agent_idx + 1];

        // Mean Q over the batch with agent 0's action slots replaced by
        // the actor's output; pure function of the actor parameters.
        let mean_q = |trainer: &Maddpg| -> f64 {
            let agent = &trainer.agents[agent_idx];
            let obs_i = batch.s.slice(s![.., obs_cols.clone()]).to_owned();
            let (phys, _) = agent.actor.forward_batch(&obs_i).unwrap();
            let mut a_sub = batch.a.clone();
            for row in 0..phys.nrows() {
                for (k, c) in act_cols.clone().enumerate() {
                    a_sub[(row, c)] =
                        (phys[(row, k)] - ctx.act_center[c]) / ctx.act_half[c];
                }
            }
            let x = trainer.critic_input(agent_idx, &batch.s, &a_sub);
            let (q, _) = agent.critic.forward_batch(&x).unwrap();
            q.column(0).sum() / 4.0
        };

        // Reproduce the analytic actor gradient (before the ascent flip).
        let analytic = {
            let agent = &trainer.agents[agent_idx];
            let obs_i = batch.s.slice(s![.., obs_cols.clone()]).to_owned();
            let (phys, actor_cache) = agent.actor.forward_batch(&obs_i).unwrap();
            let mut a_sub = batch.a.clone();
            for row in 0..phys.nrows() {
                for (k, c) in act_cols.clone().enumerate() {
                    a_sub[(row, c)] =
                        (phys[(row, k)] - ctx.act_center[c]) / ctx.act_half[c];
                }
            }
            let x = trainer.critic_input(agent_idx, &batch.s, &a_sub);
            let (_, critic_cache) = agent.critic.forward_batch(&x).unwrap();
            let ones = Array2::from_elem((4, 1), 1.0 / 4.0);
            let (_, d_input) = agent.critic.backward_batch(&critic_cache, &ones).unwrap();
            let a_col_base = ctx.obs_offsets[ctx.obs_offsets.len() - 1] + ctx.act_offsets[agent_idx];
            let mut d_phys = Array2::zeros((4, act_cols.len()));
            for row in 0..4 {
                for (k, c) in act_cols.clone().enumerate() {
                    d_phys[(row, k)] = d_input[(row, a_col_base + k)] / ctx.act_half[c];
                }
            }
            agent
                .actor
                .backward_batch(&actor_cache, &d_phys)
                .unwrap()
                .0
        };

        // Central differences over a sample of actor parameters.
        let h = 1e-6;
        let mut worst = 0.0f64;
        for (l, idx) in [(0usize, 0usize), (0, 5), (1, 3), (2, 1)] {
            let (r, c) = (
                idx / trainer.agents[agent_idx].actor.layers[l].w.ncols(),
                idx % trainer.agents[agent_idx].actor.layers[l].w.ncols(),
            );
            let orig = trainer.agents[agent_idx].actor.layers[l].w[(r, c)];
            trainer.agents[agent_idx].actor.layers[l].w[(r, c)] = orig + h;
            let plus = mean_q(&trainer);
            trainer.agents[agent_idx].actor.layers[l].w[(r, c)] = orig - h;
            let minus = mean_q(&trainer);
            trainer.agents[agent_idx].actor.layers[l].w[(r, c)] = orig;
            let fd = (plus - minus) / (2.0 * h);
            let an = analytic.layers[l].w[(r, c)];
            let rel = (an - fd).abs() / (an.abs() + fd.abs()).max(1e-8);
            worst = worst.max(rel);
        }
        assert!(worst < 1e-4, "actor gradient rel err {worst}");
    }

    /// A critic reading only the other agent's action slots produces a
    /// zero actor gradient: slot substitution touches only slot i.
    #[test]
    fn actor_update_isolates_other_agents_slots() {
        let mut trainer = small_trainer(10, 8);
        // Critic of agent 0 = sum of agent 1's action slots.
        {
            let agent = &mut trainer.agents[0];
            let critic_in = agent.critic.input_dim();
            let mut rng0 = rng(11);
            agent.critic = MlpParams::new(
                critic_in,
                &[],
                vec![HeadSegment::identity(1)],
                &mut rng0,
            )
            .unwrap();
            agent.critic.layers[0].w.fill(0.0);
            agent.critic.layers[0].b.fill(0.0);
            let obs_total = trainer.obs_offsets[trainer.obs_offsets.len() - 1];
            let other_cols = trainer.act_offsets[1]..trainer.act_offsets[2];
            for c in other_cols {
                agent.critic.layers[0].w[(obs_total + c, 0)] = 1.0;
            }
            agent.critic_opt = AdamState::new(&agent.critic, 0.0);
        }
        let before: Vec<Array2<f64>> = trainer.agents[0]
            .actor
            .layers
            .iter()
            .map(|l| l.w.clone())
            .collect();
        let batch = {
            let mut sample_rng = rng(12);
            trainer.materialize(&mut sample_rng)
        };
        let y = vec![0.0; 8];
        let ctx = UpdateCtx {
            obs_offsets: &trainer.obs_offsets,
            act_offsets: &trainer.act_offsets,
            act_center: &trainer.act_center,
            act_half: &trainer.act_half,
            independent: false,
            batch_size: 8,
            noise_seed: 13,
        };
        update_one_agent(&mut trainer.agents[0], 0, &batch, &y, &ctx).unwrap();
        for (b, l) in before.iter().zip(&trainer.agents[0].actor.layers) {
            assert_eq!(b, &l.w, "actor moved despite a slot-isolated critic");
        }
    }

    /// A hand-built critic whose value peaks where agent 0's actions hit
    /// a chosen target: Q = -sum_i |a_norm_i - a*_i| via paired ReLUs.
    /// Repeated actor updates must drive the policy toward a*.
    #[test]
    fn actor_climbs_toward_the_critic_optimum() {
        let mut trainer = small_trainer(14, 16);
        let a_star = [0.4, -0.6]; // normalized units, inside the range
        {
            let agent = &mut trainer.agents[0];
            let critic_in = agent.critic.input_dim();
            let obs_total = trainer.obs_offsets[trainer.obs_offsets.len() - 1];
            let own_cols: Vec<usize> = (trainer.act_offsets[0]..trainer.act_offsets[1]).collect();
            let mut rng0 = rng(15);
            let mut critic = MlpParams::new(
                critic_in,
                &[2 * own_cols.len()],
                vec![HeadSegment::identity(1)],
                &mut rng0,
            )
            .unwrap();
            critic.layers[0].w.fill(0.0);
            critic.layers[0].b.fill(0.0);
            critic.layers[1].w.fill(0.0);
            critic.layers[1].b.fill(0.0);
            for (j, &c) in own_cols.iter().enumerate() {
                let col_in = obs_total + c;
                // relu(a - a*) and relu(a* - a)
                critic.layers[0].w[(col_in, 2 * j)] = 1.0;
                critic.layers[0].b[2 * j] = -a_star[j];
                critic.layers[0].w[(col_in, 2 * j + 1)] = -1.0;
                critic.layers[0].b[2 * j + 1] = a_star[j];
                critic.layers[1].w[(2 * j, 0)] = -1.0;
                critic.layers[1].w[(2 * j + 1, 0)] = -1.0;
            }
            agent.critic = critic;
            agent.critic_opt = AdamState::new(&agent.critic, 0.0); // frozen critic
        }

        let batch = {
            let mut sample_rng = rng(16);
            trainer.materialize(&mut sample_rng)
        };
        let ctx = UpdateCtx {
            obs_offsets: &trainer.obs_offsets,
            act_offsets: &trainer.act_offsets,
            act_center: &trainer.act_center,
            act_half: &trainer.act_half,
            independent: false,
            batch_size: 16,
            noise_seed: 17,
        };

        let mean_dist = |trainer: &Maddpg| -> f64 {
            let agent = &trainer.agents[0];
            let obs_i = batch
                .s
                .slice(s![.., trainer.obs_offsets[0]..trainer.obs_offsets[1]])
                .to_owned();
            let (phys, _) = agent.actor.forward_batch(&obs_i).unwrap();
            let mut total = 0.0;
            for row in 0..phys.nrows() {
                for (k, c) in (trainer.act_offsets[0]..trainer.act_offsets[1]).enumerate() {
                    let norm = (phys[(row, k)] - trainer.act_center[c]) / trainer.act_half[c];
                    total += (norm - a_star[k]).abs();
                }
            }
            total / phys.nrows() as f64
        };

        let before = mean_dist(&trainer);
        // Freeze the critic by feeding back its own predictions as y.
        for _ in 0..300 {
            let x = trainer.critic_input(0, &batch.s, &batch.a);
            let (q, _) = trainer.agents[0].critic.forward_batch(&x).unwrap();
            let y: Vec<f64> = (0..16).map(|row| q[(row, 0)]).collect();
            update_one_agent(&mut trainer.agents[0], 0, &batch, &y, &ctx).unwrap();
        }
        let after = mean_dist(&trainer);
        assert!(
            after < 0.5 * before,
            "actor did not approach the optimum: {before} -> {after}"
        );
    }
}
