//! Per-agent actor/critic pairs and action selection.

use ndarray::Array2;
use rand::Rng;

use crate::neural::{
    soft_update, AdamState, GumbelCtx, HeadKind, HeadSegment, MlpParams, NeuralError, OuState,
};
use crate::scenarios::{Action, ActionSlot, ActionSlotKind, AgentRole, Observation, WorldConfig};

use super::TrainConfig;

/// Static description of one agent: dimensions, action slots and the
/// scaling applied at the network boundary.
#[derive(Clone, Debug)]
pub struct AgentSpec {
    pub role: AgentRole,
    pub obs_dim: usize,
    pub obs_scale: Vec<f64>,
    pub slots: Vec<ActionSlot>,
}

impl AgentSpec {
    pub fn from_world(cfg: &WorldConfig, agent: usize) -> Result<Self, crate::scenarios::ScenarioError> {
        Ok(Self {
            role: cfg.role(agent)?,
            obs_dim: cfg.observation_dim(agent)?,
            obs_scale: cfg.observation_scale(agent)?,
            slots: cfg.action_slots(agent)?,
        })
    }

    pub fn action_dim(&self) -> usize {
        self.slots.len()
    }

    /// Actor output heads: one bounded head per helm/real-message slot,
    /// one Gumbel pair per message bit.
    pub fn actor_heads(&self) -> Vec<HeadSegment> {
        self.slots
            .iter()
            .map(|slot| match slot.kind {
                ActionSlotKind::MessageBit => HeadSegment::gumbel_bits(1),
                _ => HeadSegment::bounded(slot.lo, slot.hi, 1),
            })
            .collect()
    }

    pub fn scale_obs(&self, obs: &Observation) -> Vec<f64> {
        obs.0
            .iter()
            .zip(&self.obs_scale)
            .map(|(v, s)| v * s)
            .collect()
    }

    /// Maps a physical action into [-1, 1] per slot for critic input.
    pub fn normalize_action(&self, action: &[f64], out: &mut Vec<f64>) {
        for (v, slot) in action.iter().zip(&self.slots) {
            let c = 0.5 * (slot.lo + slot.hi);
            let h = 0.5 * (slot.hi - slot.lo);
            out.push((v - c) / h);
        }
    }

    /// Per-slot half-ranges, the scale factor between normalized and
    /// physical action units.
    pub fn half_ranges(&self) -> Vec<f64> {
        self.slots
            .iter()
            .map(|s| 0.5 * (s.hi - s.lo))
            .collect()
    }

    /// Number of slots that take Ornstein-Uhlenbeck exploration noise
    /// (everything except Gumbel bits, which explore via sampling).
    pub fn continuous_slots(&self) -> usize {
        self.slots
            .iter()
            .filter(|s| s.kind != ActionSlotKind::MessageBit)
            .count()
    }
}

/// Actor, critic and their target twins plus optimizer state.
pub struct AgentNets {
    pub spec: AgentSpec,
    pub actor: MlpParams,
    pub critic: MlpParams,
    pub target_actor: MlpParams,
    pub target_critic: MlpParams,
    pub actor_opt: AdamState,
    pub critic_opt: AdamState,
    pub tau: f64,
    pub gamma: f64,
    pub gumbel_temperature: f64,
}

impl AgentNets {
    pub fn new<R: Rng>(
        spec: AgentSpec,
        critic_input_dim: usize,
        cfg: &TrainConfig,
        rng: &mut R,
    ) -> Result<Self, NeuralError> {
        let actor =
            MlpParams::new_policy(spec.obs_dim, &cfg.actor_hidden, spec.actor_heads(), rng)?;
        let critic = MlpParams::new(
            critic_input_dim,
            &cfg.critic_hidden,
            vec![HeadSegment::identity(1)],
            rng,
        )?;
        let target_actor = actor.clone();
        let target_critic = critic.clone();
        let actor_opt = AdamState::new(&actor, cfg.actor_lr);
        let critic_opt = AdamState::new(&critic, cfg.critic_lr);
        Ok(Self {
            spec,
            actor,
            critic,
            target_actor,
            target_critic,
            actor_opt,
            critic_opt,
            tau: cfg.tau,
            gamma: cfg.gamma,
            gumbel_temperature: cfg.gumbel_temperature,
        })
    }

    /// Deterministic action: greedy bits, no exploration noise.
    pub fn act_greedy(&self, obs: &Observation) -> Result<Action, NeuralError> {
        let x = self.spec.scale_obs(obs);
        let (y, _) = self.actor.forward(&x)?;
        Ok(Action(y))
    }

    /// Exploration action: Gumbel-sampled bits plus Ornstein-Uhlenbeck
    /// noise on the continuous slots, clamped to the slot ranges.
    pub fn act_explore<R: Rng>(
        &self,
        obs: &Observation,
        ou: &mut OuState,
        rng: &mut R,
    ) -> Result<Action, NeuralError> {
        let x = self.spec.scale_obs(obs);
        let noise_w = self.actor.gumbel_noise_width();
        let gumbel_noise = Array2::from_shape_fn((1, noise_w), |_| {
            crate::channels::gumbel::sample(rng)
        });
        let ctx = GumbelCtx {
            temperature: self.gumbel_temperature,
            noise: if noise_w > 0 { Some(&gumbel_noise) } else { None },
            hard: true,
        };
        let (mut y, _) = self.actor.forward_with(&x, &ctx)?;

        let w = crate::neural::ou_sample(ou, rng);
        let mut w_iter = w.iter();
        for (v, slot) in y.iter_mut().zip(&self.spec.slots) {
            if slot.kind == ActionSlotKind::MessageBit {
                continue;
            }
            let h = 0.5 * (slot.hi - slot.lo);
            let noise = w_iter.next().copied().unwrap_or(0.0);
            *v = (*v + h * noise).clamp(slot.lo, slot.hi);
        }
        Ok(Action(y))
    }

    /// Target soft updates for both twins.
    pub fn update_targets(&mut self) {
        soft_update(&self.actor, &mut self.target_actor, self.tau);
        soft_update(&self.critic, &mut self.target_critic, self.tau);
    }

    /// Fresh OU state sized for this agent's continuous slots.
    pub fn make_ou(&self, theta: f64, sigma: f64) -> OuState {
        OuState::new(self.spec.continuous_slots(), theta, sigma)
    }
}

/// Splits head segments into the slot ranges they produce; used when
/// slicing gradients out of joint critic inputs.
pub fn head_slot_count(heads: &[HeadSegment]) -> usize {
    heads.iter().map(|h| h.slots).sum()
}

/// True if any head is a Gumbel-bit head.
pub fn has_gumbel(heads: &[HeadSegment]) -> bool {
    heads.iter().any(|h| matches!(h.kind, HeadKind::GumbelBits))
}
