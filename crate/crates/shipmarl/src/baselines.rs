//! Scripted baseline policies: a PID heading autopilot that knows the
//! true goal, and a fixed straight-runner.

use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::marl::{evaluate_policy, EvalOptions, JointPolicy, MarlError};
use crate::analysis::MetricsRecord;
use crate::scenarios::{wrap_angle, Action, AgentRole, Observation, WorldConfig, WorldState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub k_p: f64,
    pub k_i: f64,
    pub k_d: f64,
    /// Bound on the integral term's rudder contribution, rad.
    pub integral_clamp: f64,
}

impl Default for PidGains {
    /// Found by the grid search in `examples/tune_pid.rs` (settling time
    /// on a 30 degree heading step at full power, ties broken by
    /// overshoot).
    fn default() -> Self {
        Self {
            k_p: 0.4,
            k_i: 0.0,
            k_d: 1.0,
            integral_clamp: 0.35,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PidMemory {
    pub integral: f64,
    pub prev_error: Option<f64>,
}

/// One PID step on the heading error toward `goal`. The propeller always
/// runs at full power; the derivative acts on the measured error so a
/// setpoint jump cannot kick the rudder.
pub fn pid_control(
    state: &crate::dynamics::ShipState,
    goal: [f64; 2],
    gains: &PidGains,
    memory: PidMemory,
    dt: f64,
    params: &crate::dynamics::ShipParams,
) -> (f64, f64, PidMemory) {
    let bearing = (goal[1] - state.y0).atan2(goal[0] - state.x0);
    let error = wrap_angle(bearing - state.psi);

    let mut integral = memory.integral + error * dt;
    if gains.k_i != 0.0 {
        let clamp = gains.integral_clamp / gains.k_i.abs();
        integral = integral.clamp(-clamp, clamp);
    }
    let derivative = match memory.prev_error {
        Some(prev) => (error - prev) / dt,
        None => 0.0,
    };
    let u = gains.k_p * error + gains.k_i * integral + gains.k_d * derivative;
    let delta_d = u.clamp(-params.delta_max, params.delta_max);
    (
        delta_d,
        params.n_p_max,
        PidMemory {
            integral,
            prev_error: Some(error),
        },
    )
}

/// PID autopilot with ideal information: it reads the true goal from the
/// world state instead of decoding messages.
#[derive(Clone, Copy, Debug, Default)]
pub struct PidPolicy {
    pub gains: PidGains,
}

impl JointPolicy for PidPolicy {
    type EpisodeState = Vec<PidMemory>;

    fn init_state(&self, cfg: &WorldConfig) -> Vec<PidMemory> {
        vec![PidMemory::default(); cfg.n_ships]
    }

    fn act(
        &self,
        _observations: &[Observation],
        world: &WorldState,
        cfg: &WorldConfig,
        state: &mut Vec<PidMemory>,
        _rng: &mut ChaCha12Rng,
    ) -> Result<Vec<Action>, MarlError> {
        let mut actions = Vec::with_capacity(cfg.n_agents());
        for agent in 0..cfg.n_agents() {
            let action = match cfg.role(agent)? {
                AgentRole::NavShip => {
                    let (delta_d, n_p, mem) = pid_control(
                        &world.ships[agent],
                        world.goals[agent],
                        &self.gains,
                        state[agent],
                        cfg.control_dt,
                        &cfg.ship,
                    );
                    state[agent] = mem;
                    Action(vec![n_p, delta_d])
                }
                AgentRole::AvoidShip => {
                    let (delta_d, n_p, mem) = pid_control(
                        &world.ships[agent],
                        world.goals[agent],
                        &self.gains,
                        state[agent],
                        cfg.control_dt,
                        &cfg.ship,
                    );
                    state[agent] = mem;
                    let mut v = vec![n_p, delta_d];
                    v.extend(std::iter::repeat(0.0).take(cfg.message_len));
                    Action(v)
                }
                AgentRole::FixedStandOn => Action(vec![0.0; cfg.message_len]),
                AgentRole::Speaker => Action(vec![0.0; cfg.message_len]),
            };
            actions.push(action);
        }
        Ok(actions)
    }

    fn name(&self) -> String {
        "pid".to_string()
    }
}

/// Every ship holds her course at 100 rpm and says nothing.
#[derive(Clone, Copy, Debug, Default)]
pub struct FixedStraightPolicy;

impl JointPolicy for FixedStraightPolicy {
    type EpisodeState = ();

    fn init_state(&self, _cfg: &WorldConfig) {}

    fn act(
        &self,
        _observations: &[Observation],
        _world: &WorldState,
        cfg: &WorldConfig,
        _state: &mut (),
        _rng: &mut ChaCha12Rng,
    ) -> Result<Vec<Action>, MarlError> {
        let mut actions = Vec::with_capacity(cfg.n_agents());
        for agent in 0..cfg.n_agents() {
            let action = match cfg.role(agent)? {
                AgentRole::NavShip => Action(vec![100.0, 0.0]),
                AgentRole::AvoidShip => {
                    let mut v = vec![100.0, 0.0];
                    v.extend(std::iter::repeat(0.0).take(cfg.message_len));
                    Action(v)
                }
                AgentRole::FixedStandOn | AgentRole::Speaker => {
                    Action(vec![0.0; cfg.message_len])
                }
            };
            actions.push(action);
        }
        Ok(actions)
    }

    fn name(&self) -> String {
        "fixed".to_string()
    }
}

/// Which scripted baseline to run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScriptedPolicy {
    Pid(PidGains),
    FixedStraight,
}

/// Runs a scripted policy through the standard evaluation harness and
/// returns the same metrics record as a checkpoint evaluation.
pub fn run_scripted(
    policy: ScriptedPolicy,
    cfg: &WorldConfig,
    opts: &EvalOptions,
) -> Result<MetricsRecord, MarlError> {
    match policy {
        ScriptedPolicy::Pid(gains) => evaluate_policy(cfg, &PidPolicy { gains }, opts),
        ScriptedPolicy::FixedStraight => evaluate_policy(cfg, &FixedStraightPolicy, opts),
    }
}
