//! Dec-POMDP environment layer: the two cooperative scenarios.
//!
//! **Navigation** — `N` ships, `M` colored landmarks and one static,
//! non-physical speaker. Only the speaker knows which landmark color is
//! the target; it must learn to say so over the channel. Agents are
//! indexed ships first, speaker last.
//!
//! **Avoidance** — two ships that cannot see each other. Each navigates
//! to its own goal while exchanging a 3-element message per step; the
//! encounter geometry (head-on / crossing / overtaking) is drawn
//! uniformly at reset.
//!
//! Messages emitted at step `t` pass through the channel and appear in
//! the recipient's observation at step `t+1`; inboxes start zeroed.
//!
//! Observation layouts (all values SI/rad, message slots last):
//!
//! - navigation ship: `[U_x, U_y, beta, delta, theta_1..theta_M, d_1..d_M, m_hat(k)]`
//! - speaker: one-hot target color, length `M`
//! - avoidance ship: `[delta, beta, psi, p_x, p_y, d, theta, m_hat(3)]`
//!
//! Action layouts:
//!
//! - navigation ship: `[n_p, delta_d]`
//! - speaker: `[m(k)]`
//! - avoidance ship: `[n_p, delta_d, m(3)]`; the fixed stand-on ablation
//!   reduces ship 1 to `[m(3)]`

pub mod colregs;
pub mod log;
pub mod rewards;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::{transmit, ChannelConfig, Message};
use crate::dynamics::{
    integrate_step_with, kinematics, Command, DynamicsError, ShipParams, ShipState,
};
pub use colregs::{classify_encounter, meeting_point, EncounterType, GiveWay, MeetingPoint};
pub use rewards::{reward_colregs, reward_collision, reward_goal, RewardConstants};

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = a % two_pi;
    if w <= -std::f64::consts::PI {
        w += two_pi;
    } else if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid world config: {0}")]
    BadConfig(String),
    #[error("reset sampling failed after {0} attempts")]
    ResetSampling(usize),
    #[error("both ships are stationary; encounter undefined")]
    ShipsNotUnderWay,
    #[error("agent {agent} action has {got} values, expected {expected}")]
    ActionLength {
        agent: usize,
        expected: usize,
        got: usize,
    },
    #[error("non-finite action value from agent {0}")]
    NonFiniteAction(usize),
    #[error("channel error: {0}")]
    Channel(#[from] crate::channels::ChannelError),
    #[error("dynamics error: {0}")]
    Dynamics(#[from] DynamicsError),
    #[error("unknown agent index {0}")]
    UnknownAgent(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Navigation,
    Avoidance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AgentRole {
    NavShip,
    Speaker,
    AvoidShip,
    /// Avoidance ablation: rudder fixed at zero, 100 rpm, message only.
    FixedStandOn,
}

#[derive(Clone, Debug)]
pub struct WorldConfig {
    pub scenario: Scenario,
    pub n_ships: usize,
    pub n_landmarks: usize,
    /// Message length k.
    pub message_len: usize,
    /// Navigation spawn region half-width, m.
    pub arena_half_width: f64,
    /// Avoidance spawn annulus radii, m.
    pub spawn_radius_inner: f64,
    pub spawn_radius_outer: f64,
    /// Steps per episode, L_e.
    pub max_steps: usize,
    pub goal_radius: f64,
    pub channel: ChannelConfig,
    pub rewards: RewardConstants,
    pub control_dt: f64,
    pub substeps: usize,
    /// Avoidance ablation: ship 1 moves straight at 100 rpm and only
    /// speaks. Used together with `force_give_way_first`.
    pub fixed_standon: bool,
    /// Construct encounters so ship 0 is the give-way vessel (head-on
    /// excepted). Used for paired cooperative/non-cooperative runs.
    pub force_give_way_first: bool,
    pub ship: ShipParams,
}

impl WorldConfig {
    pub fn navigation() -> Self {
        Self {
            scenario: Scenario::Navigation,
            n_ships: 1,
            n_landmarks: 3,
            message_len: 2,
            arena_half_width: 100.0,
            spawn_radius_inner: 60.0,
            spawn_radius_outer: 120.0,
            max_steps: 25,
            goal_radius: 10.0,
            channel: ChannelConfig::lossless(),
            rewards: RewardConstants::default(),
            control_dt: 1.0,
            substeps: 10,
            fixed_standon: false,
            force_give_way_first: false,
            ship: ShipParams::default_usv(),
        }
    }

    pub fn avoidance() -> Self {
        Self {
            scenario: Scenario::Avoidance,
            n_ships: 2,
            n_landmarks: 0,
            message_len: 3,
            arena_half_width: 150.0,
            spawn_radius_inner: 60.0,
            spawn_radius_outer: 120.0,
            max_steps: 40,
            goal_radius: 10.0,
            channel: ChannelConfig::awgn(0.0),
            rewards: RewardConstants::default(),
            control_dt: 1.0,
            substeps: 10,
            fixed_standon: false,
            force_give_way_first: false,
            ship: ShipParams::default_usv(),
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut problems = Vec::new();
        if self.max_steps == 0 {
            problems.push("max_steps must be >= 1".to_string());
        }
        if self.message_len == 0 {
            problems.push("message_len must be >= 1".to_string());
        }
        if self.goal_radius != 10.0 {
            problems.push(format!("goal_radius must be 10, got {}", self.goal_radius));
        }
        if self.control_dt <= 0.0 || self.substeps == 0 {
            problems.push("control_dt must be > 0 with at least one substep".to_string());
        }
        match self.scenario {
            Scenario::Navigation => {
                if self.n_ships == 0 || self.n_landmarks < 2 {
                    problems.push("navigation needs >= 1 ship and >= 2 landmarks".to_string());
                }
                if self.arena_half_width <= 2.0 * self.goal_radius {
                    problems.push("arena too small for the goal radius".to_string());
                }
                if self.fixed_standon {
                    problems.push("fixed_standon applies to avoidance only".to_string());
                }
            }
            Scenario::Avoidance => {
                if self.n_ships != 2 {
                    problems.push("avoidance is a two-ship scenario".to_string());
                }
                if !(0.0 < self.spawn_radius_inner
                    && self.spawn_radius_inner < self.spawn_radius_outer)
                {
                    problems.push("need 0 < R1 < R2".to_string());
                }
            }
        }
        if let Err(e) = self.channel.validate() {
            problems.push(e.to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::BadConfig(problems.join("; ")))
        }
    }

    pub fn n_agents(&self) -> usize {
        match self.scenario {
            Scenario::Navigation => self.n_ships + 1,
            Scenario::Avoidance => self.n_ships,
        }
    }

    pub fn role(&self, agent: usize) -> Result<AgentRole, ScenarioError> {
        match self.scenario {
            Scenario::Navigation if agent < self.n_ships => Ok(AgentRole::NavShip),
            Scenario::Navigation if agent == self.n_ships => Ok(AgentRole::Speaker),
            Scenario::Avoidance if agent < 2 => {
                if self.fixed_standon && agent == 1 {
                    Ok(AgentRole::FixedStandOn)
                } else {
                    Ok(AgentRole::AvoidShip)
                }
            }
            _ => Err(ScenarioError::UnknownAgent(agent)),
        }
    }

    pub fn roles(&self) -> Vec<AgentRole> {
        (0..self.n_agents())
            .map(|a| self.role(a).expect("agent in range"))
            .collect()
    }

    pub fn observation_dim(&self, agent: usize) -> Result<usize, ScenarioError> {
        Ok(match self.role(agent)? {
            AgentRole::NavShip => 4 + 2 * self.n_landmarks + self.message_len,
            AgentRole::Speaker => self.n_landmarks,
            AgentRole::AvoidShip | AgentRole::FixedStandOn => 7 + self.message_len,
        })
    }

    /// Named observation slices, in layout order.
    pub fn observation_layout(&self, agent: usize) -> Result<Vec<NamedSlice>, ScenarioError> {
        let m = self.n_landmarks;
        let k = self.message_len;
        Ok(match self.role(agent)? {
            AgentRole::NavShip => vec![
                NamedSlice::new("velocity_earth", 0, 2),
                NamedSlice::new("drift_angle", 2, 1),
                NamedSlice::new("rudder", 3, 1),
                NamedSlice::new("landmark_bearings", 4, m),
                NamedSlice::new("landmark_distances", 4 + m, m),
                NamedSlice::new("message", 4 + 2 * m, k),
            ],
            AgentRole::Speaker => vec![NamedSlice::new("target_color_one_hot", 0, m)],
            AgentRole::AvoidShip | AgentRole::FixedStandOn => vec![
                NamedSlice::new("rudder", 0, 1),
                NamedSlice::new("drift_angle", 1, 1),
                NamedSlice::new("heading", 2, 1),
                NamedSlice::new("position", 3, 2),
                NamedSlice::new("goal_distance", 5, 1),
                NamedSlice::new("goal_bearing", 6, 1),
                NamedSlice::new("message", 7, k),
            ],
        })
    }

    pub fn action_slots(&self, agent: usize) -> Result<Vec<ActionSlot>, ScenarioError> {
        let bit_messages = self.channel.wants_binary();
        let message = |k: usize| -> Vec<ActionSlot> {
            (0..k)
                .map(|_| {
                    if bit_messages {
                        ActionSlot {
                            kind: ActionSlotKind::MessageBit,
                            lo: 0.0,
                            hi: 1.0,
                        }
                    } else {
                        ActionSlot {
                            kind: ActionSlotKind::MessageReal,
                            lo: -1.0,
                            hi: 1.0,
                        }
                    }
                })
                .collect()
        };
        let helm = vec![
            ActionSlot {
                kind: ActionSlotKind::Propeller,
                lo: 0.0,
                hi: self.ship.n_p_max,
            },
            ActionSlot {
                kind: ActionSlotKind::Rudder,
                lo: -self.ship.delta_max,
                hi: self.ship.delta_max,
            },
        ];
        Ok(match self.role(agent)? {
            AgentRole::NavShip => helm,
            AgentRole::Speaker => message(self.message_len),
            AgentRole::AvoidShip => {
                let mut slots = helm;
                slots.extend(message(self.message_len));
                slots
            }
            AgentRole::FixedStandOn => message(self.message_len),
        })
    }

    /// Per-element scale applied to observations before they enter a
    /// network. Physical units stay in the environment.
    pub fn observation_scale(&self, agent: usize) -> Result<Vec<f64>, ScenarioError> {
        use std::f64::consts::PI;
        let d_scale = 0.01;
        let v_scale = 0.1;
        Ok(match self.role(agent)? {
            AgentRole::NavShip => {
                let mut s = vec![v_scale, v_scale, 1.0 / PI, 1.0 / self.ship.delta_max];
                s.extend(std::iter::repeat(1.0 / PI).take(self.n_landmarks));
                s.extend(std::iter::repeat(d_scale).take(self.n_landmarks));
                s.extend(std::iter::repeat(1.0).take(self.message_len));
                s
            }
            AgentRole::Speaker => vec![1.0; self.n_landmarks],
            AgentRole::AvoidShip | AgentRole::FixedStandOn => {
                let mut s = vec![
                    1.0 / self.ship.delta_max,
                    1.0 / PI,
                    1.0 / PI,
                    d_scale,
                    d_scale,
                    d_scale,
                    1.0 / PI,
                ];
                s.extend(std::iter::repeat(1.0).take(self.message_len));
                s
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NamedSlice {
    pub name: &'static str,
    pub start: usize,
    pub len: usize,
}

impl NamedSlice {
    fn new(name: &'static str, start: usize, len: usize) -> Self {
        Self { name, start, len }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionSlotKind {
    Propeller,
    Rudder,
    MessageReal,
    MessageBit,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActionSlot {
    pub kind: ActionSlotKind,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub position: [f64; 2],
    pub color: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation(pub Vec<f64>);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Action(pub Vec<f64>);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub ships: Vec<ShipState>,
    pub landmarks: Vec<Landmark>,
    pub target_color: usize,
    pub goals: Vec<[f64; 2]>,
    /// Per-agent delivered message for the next observation.
    pub inbox: Vec<Message>,
    pub step_index: usize,
    pub encounter: Option<(EncounterType, GiveWay)>,
    pub initial_meeting: Option<MeetingPoint>,
    pub done: bool,
}

/// Per-agent reward decomposition; the total is always the exact sum.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardTerms {
    pub goal: f64,
    pub colregs: f64,
    pub collision: f64,
}

impl RewardTerms {
    pub fn total(&self) -> f64 {
        self.goal + self.colregs + self.collision
    }
}

/// Everything produced by one environment step.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub world: WorldState,
    pub observations: Vec<Observation>,
    pub rewards: Vec<f64>,
    pub terms: Vec<RewardTerms>,
    pub done: bool,
    /// Every ship is inside its goal disc. Unlike a time-limit cutoff,
    /// this is a real terminal state for bootstrapping purposes.
    pub reached_goals: bool,
    /// Dynamics blew up; the episode ends and does not count as success.
    pub failure: Option<String>,
    pub events: StepEvents,
}

#[derive(Clone, Debug, Default)]
pub struct StepEvents {
    pub messages_sent: Vec<Option<Message>>,
    pub messages_delivered: Vec<Option<Message>>,
    pub meeting: Option<MeetingPoint>,
    pub risk_active: bool,
    pub collision: bool,
    pub ship_distance: Option<f64>,
}

const RESET_ATTEMPTS: usize = 1000;

pub fn reset<R: Rng>(cfg: &WorldConfig, rng: &mut R) -> Result<WorldState, ScenarioError> {
    cfg.validate()?;
    match cfg.scenario {
        Scenario::Navigation => reset_navigation(cfg, rng),
        Scenario::Avoidance => reset_avoidance(cfg, rng),
    }
}

fn reset_navigation<R: Rng>(cfg: &WorldConfig, rng: &mut R) -> Result<WorldState, ScenarioError> {
    let a = cfg.arena_half_width;
    let min_sep = 2.0 * cfg.goal_radius;

    let mut ships = Vec::with_capacity(cfg.n_ships);
    for _ in 0..cfg.n_ships {
        let x = rng.random_range(-a..a);
        let y = rng.random_range(-a..a);
        // Heading points broadly at the arena center (uniform +-60deg
        // around it): entering traffic, never a dead-astern start. The
        // direction depends only on the spawn point, so it leaks nothing
        // about the target.
        let to_center = (-y).atan2(-x);
        let psi = wrap_angle(to_center + rng.random_range(-1.0..1.0) * 60f64.to_radians());
        ships.push(ShipState {
            x0: x,
            y0: y,
            psi,
            u: 3.0,
            n_p: 60.0,
            ..ShipState::at_rest()
        });
    }

    let mut landmarks: Vec<Landmark> = Vec::with_capacity(cfg.n_landmarks);
    let mut attempts = 0;
    while landmarks.len() < cfg.n_landmarks {
        attempts += 1;
        if attempts > RESET_ATTEMPTS {
            return Err(ScenarioError::ResetSampling(RESET_ATTEMPTS));
        }
        let candidate = [rng.random_range(-a..a), rng.random_range(-a..a)];
        let clear_of_landmarks = landmarks
            .iter()
            .all(|l| dist(l.position, candidate) >= min_sep);
        let clear_of_ships = ships
            .iter()
            .all(|s| dist(s.position(), candidate) >= min_sep);
        if clear_of_landmarks && clear_of_ships {
            landmarks.push(Landmark {
                position: candidate,
                color: landmarks.len(),
            });
        }
    }

    let target_color = rng.random_range(0..cfg.n_landmarks);
    let goal = landmarks[target_color].position;
    Ok(WorldState {
        goals: vec![goal; cfg.n_ships],
        ships,
        landmarks,
        target_color,
        inbox: zeroed_inbox(cfg),
        step_index: 0,
        encounter: None,
        initial_meeting: None,
        done: false,
    })
}

fn reset_avoidance<R: Rng>(cfg: &WorldConfig, rng: &mut R) -> Result<WorldState, ScenarioError> {
    use std::f64::consts::PI;
    // The family is drawn once so that per-family construction rejects
    // cannot skew the uniform encounter mix.
    let family = rng.random_range(0..3usize);
    for _ in 0..RESET_ATTEMPTS {
        let meeting = [rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)];

        let phi_a = rng.random_range(-PI..PI);
        let rho_a = rng.random_range(cfg.spawn_radius_inner..cfg.spawn_radius_outer);
        let jitter_a = rng.random_range(-2.0..2.0f64).to_radians();
        let mk_ship = |phi: f64, rho: f64, heading_jitter: f64, u: f64, n_p: f64| {
            let x = meeting[0] + rho * phi.cos();
            let y = meeting[1] + rho * phi.sin();
            // Point at the meeting point, plus jitter.
            let heading = wrap_angle(phi + PI + heading_jitter);
            ShipState {
                x0: x,
                y0: y,
                psi: heading,
                u,
                n_p,
                ..ShipState::at_rest()
            }
        };

        let (ship_a, ship_b) = match family {
            // Head-on: opposite bearings from the meeting point.
            0 => {
                let a = mk_ship(phi_a, rho_a, jitter_a, 5.0, 100.0);
                let rho_b = rng.random_range(cfg.spawn_radius_inner..cfg.spawn_radius_outer);
                let phi_b = phi_a + PI + rng.random_range(-2.0..2.0f64).to_radians();
                let b = mk_ship(
                    phi_b,
                    rho_b,
                    rng.random_range(-2.0..2.0f64).to_radians(),
                    5.0,
                    100.0,
                );
                (a, b)
            }
            // Crossing: bearings separated by 30..110 degrees. Placing B
            // at phi_a - sep puts her on A's starboard bow.
            1 => {
                let a = mk_ship(phi_a, rho_a, jitter_a, 5.0, 100.0);
                let side = if cfg.force_give_way_first || rng.random::<bool>() {
                    -1.0
                } else {
                    1.0
                };
                let sep = rng.random_range(30.0..110.0f64).to_radians() * side;
                let rho_b = rng.random_range(cfg.spawn_radius_inner..cfg.spawn_radius_outer);
                let b = mk_ship(
                    phi_a + sep,
                    rho_b,
                    rng.random_range(-2.0..2.0f64).to_radians(),
                    5.0,
                    100.0,
                );
                (a, b)
            }
            // Overtaking: same bearing, overtaker behind and faster.
            _ => {
                let rho_slow = rng
                    .random_range(cfg.spawn_radius_inner..cfg.spawn_radius_outer * 0.75);
                let slow = mk_ship(phi_a, rho_slow, jitter_a, 3.4, 60.0);
                let gap = rng.random_range(15.0..40.0);
                let fast = mk_ship(
                    phi_a + rng.random_range(-1.0..1.0f64).to_radians(),
                    rho_slow + gap,
                    rng.random_range(-1.0..1.0f64).to_radians(),
                    7.5,
                    150.0,
                );
                (fast, slow)
            }
        };

        // Randomize index order unless ship 0 must give way.
        let (ship_a, ship_b) = if !cfg.force_give_way_first && rng.random::<bool>() {
            (ship_b, ship_a)
        } else {
            (ship_a, ship_b)
        };

        let classified = match classify_encounter(&ship_a, &ship_b) {
            Ok(c) => c,
            Err(_) => continue,
        };
        if classified.0.family() != family {
            continue;
        }
        if cfg.force_give_way_first && classified.1 == GiveWay::Ship(1) {
            continue;
        }
        let initial_meeting = match meeting_point(&ship_a, &ship_b) {
            Some(m) => m,
            None => continue,
        };

        // Goals sit on each ship's course ray, past the meeting point.
        let ships = vec![ship_a, ship_b];
        let goals: Vec<[f64; 2]> = ships
            .iter()
            .zip([initial_meeting.r_a, initial_meeting.r_b])
            .map(|(s, r)| {
                let overshoot = rng.random_range(40.0..80.0);
                [
                    s.x0 + (r + overshoot) * s.psi.cos(),
                    s.y0 + (r + overshoot) * s.psi.sin(),
                ]
            })
            .collect();

        return Ok(WorldState {
            ships,
            landmarks: Vec::new(),
            target_color: 0,
            goals,
            inbox: zeroed_inbox(cfg),
            step_index: 0,
            encounter: Some(classified),
            initial_meeting: Some(initial_meeting),
            done: false,
        });
    }
    Err(ScenarioError::ResetSampling(RESET_ATTEMPTS))
}

fn zeroed_inbox(cfg: &WorldConfig) -> Vec<Message> {
    (0..cfg.n_agents())
        .map(|a| match cfg.role(a).expect("agent in range") {
            AgentRole::Speaker => Message::zeros(0),
            _ => Message::zeros(cfg.message_len),
        })
        .collect()
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn observe(
    ws: &WorldState,
    cfg: &WorldConfig,
    agent: usize,
) -> Result<Observation, ScenarioError> {
    let role = cfg.role(agent)?;
    let mut v = Vec::with_capacity(cfg.observation_dim(agent)?);
    match role {
        AgentRole::NavShip => {
            let ship = &ws.ships[agent];
            let (u_x, u_y, beta) = kinematics(ship);
            v.extend([u_x, u_y, beta, ship.delta]);
            for lm in &ws.landmarks {
                let bearing = wrap_angle(
                    (lm.position[1] - ship.y0).atan2(lm.position[0] - ship.x0) - ship.psi,
                );
                v.push(bearing);
            }
            for lm in &ws.landmarks {
                v.push(dist(ship.position(), lm.position));
            }
            v.extend(&ws.inbox[agent].0);
        }
        AgentRole::Speaker => {
            for c in 0..cfg.n_landmarks {
                v.push(f64::from(c == ws.target_color));
            }
        }
        AgentRole::AvoidShip | AgentRole::FixedStandOn => {
            let ship = &ws.ships[agent];
            let goal = ws.goals[agent];
            let d = dist(ship.position(), goal);
            let theta = wrap_angle((goal[1] - ship.y0).atan2(goal[0] - ship.x0) - ship.psi);
            v.extend([
                ship.delta,
                ship.drift_angle(),
                wrap_angle(ship.psi),
                ship.x0,
                ship.y0,
                d,
                theta,
            ]);
            v.extend(&ws.inbox[agent].0);
        }
    }
    Ok(Observation(v))
}

pub fn observe_all(ws: &WorldState, cfg: &WorldConfig) -> Result<Vec<Observation>, ScenarioError> {
    (0..cfg.n_agents()).map(|a| observe(ws, cfg, a)).collect()
}

/// Splits an agent's action into helm commands and an outgoing message.
fn interpret_action(
    cfg: &WorldConfig,
    agent: usize,
    action: &Action,
) -> Result<(Option<Command>, Option<Message>), ScenarioError> {
    let slots = cfg.action_slots(agent)?;
    if action.0.len() != slots.len() {
        return Err(ScenarioError::ActionLength {
            agent,
            expected: slots.len(),
            got: action.0.len(),
        });
    }
    if action.0.iter().any(|v| !v.is_finite()) {
        return Err(ScenarioError::NonFiniteAction(agent));
    }
    match cfg.role(agent)? {
        AgentRole::NavShip => Ok((
            Some(Command {
                n_p_cmd: action.0[0],
                delta_d: action.0[1],
            }),
            None,
        )),
        AgentRole::Speaker => Ok((None, Some(Message(action.0.clone())))),
        AgentRole::AvoidShip => Ok((
            Some(Command {
                n_p_cmd: action.0[0],
                delta_d: action.0[1],
            }),
            Some(Message(action.0[2..].to_vec())),
        )),
        AgentRole::FixedStandOn => Ok((
            Some(Command {
                n_p_cmd: 100.0,
                delta_d: 0.0,
            }),
            Some(Message(action.0.clone())),
        )),
    }
}

/// Advances the world one control interval.
///
/// Ordering: COLREGs risk is judged on the pre-step poses and the
/// commanded rudder angles; dynamics then advance each ship; messages
/// emitted this step go through the channel into the inboxes read at the
/// next step; goal and collision terms use the post-step poses.
pub fn step_env<R: Rng>(
    ws: &WorldState,
    actions: &[Action],
    cfg: &WorldConfig,
    rng: &mut R,
) -> Result<StepOutcome, ScenarioError> {
    if actions.len() != cfg.n_agents() {
        return Err(ScenarioError::ActionLength {
            agent: usize::MAX,
            expected: cfg.n_agents(),
            got: actions.len(),
        });
    }

    let mut commands: Vec<Option<Command>> = Vec::with_capacity(actions.len());
    let mut outgoing: Vec<Option<Message>> = Vec::with_capacity(actions.len());
    for (agent, action) in actions.iter().enumerate() {
        let (cmd, msg) = interpret_action(cfg, agent, action)?;
        commands.push(cmd);
        outgoing.push(msg);
    }

    // Pre-step risk assessment for the COLREGs term.
    let mut events = StepEvents {
        messages_sent: outgoing.clone(),
        ..Default::default()
    };
    let mut colregs_term = 0.0;
    if cfg.scenario == Scenario::Avoidance {
        let current_meeting = meeting_point(&ws.ships[0], &ws.ships[1]);
        let closing = {
            let (ax, ay, _) = kinematics(&ws.ships[0]);
            let (bx, by, _) = kinematics(&ws.ships[1]);
            let rel_pos = [
                ws.ships[1].x0 - ws.ships[0].x0,
                ws.ships[1].y0 - ws.ships[0].y0,
            ];
            rel_pos[0] * (bx - ax) + rel_pos[1] * (by - ay) < 0.0
        };
        events.meeting = current_meeting;
        events.risk_active = current_meeting.is_some() && closing;
        if let Some((_, give_way)) = ws.encounter {
            let rudder_commands: Vec<f64> = commands
                .iter()
                .map(|c| c.map(|c| c.delta_d).unwrap_or(0.0))
                .collect();
            colregs_term =
                reward_colregs(events.risk_active, give_way, &rudder_commands, &cfg.rewards);
        }
    }

    // Dynamics.
    let mut world = ws.clone();
    let mut failure = None;
    for (ship_idx, ship) in world.ships.iter_mut().enumerate() {
        let cmd = commands[ship_idx].expect("every ship has a command");
        match integrate_step_with(ship, &cmd, cfg.control_dt, cfg.substeps, &cfg.ship) {
            Ok(next) => *ship = next,
            Err(e) => {
                failure = Some(format!("ship {ship_idx}: {e}"));
                break;
            }
        }
    }

    // Message routing: emitted at t, readable at t+1.
    let mut delivered: Vec<Option<Message>> = vec![None; cfg.n_agents()];
    if failure.is_none() {
        match cfg.scenario {
            Scenario::Navigation => {
                let speaker = cfg.n_ships;
                if let Some(msg) = &outgoing[speaker] {
                    for ship_idx in 0..cfg.n_ships {
                        let received = transmit(msg, &cfg.channel, rng)?;
                        world.inbox[ship_idx] = received.clone();
                        delivered[ship_idx] = Some(received);
                    }
                }
            }
            Scenario::Avoidance => {
                for (from, to) in [(0usize, 1usize), (1, 0)] {
                    if let Some(msg) = &outgoing[from] {
                        let received = transmit(msg, &cfg.channel, rng)?;
                        world.inbox[to] = received.clone();
                        delivered[to] = Some(received);
                    }
                }
            }
        }
    }
    events.messages_delivered = delivered;

    // Rewards on the post-step poses.
    let n_agents = cfg.n_agents();
    let mut terms = vec![RewardTerms::default(); n_agents];
    match cfg.scenario {
        Scenario::Navigation => {
            let goal_total: f64 = world
                .ships
                .iter()
                .zip(&world.goals)
                .map(|(s, g)| reward_goal(s.position(), *g, cfg.goal_radius, &cfg.rewards))
                .sum();
            for t in &mut terms {
                t.goal = goal_total;
            }
        }
        Scenario::Avoidance => {
            let p0 = world.ships[0].position();
            let p1 = world.ships[1].position();
            events.ship_distance = Some(dist(p0, p1));
            let collision_term = reward_collision(p0, p1, cfg.ship.length, &cfg.rewards);
            events.collision = collision_term < 0.0;
            for (i, t) in terms.iter_mut().enumerate() {
                t.goal = reward_goal(
                    world.ships[i].position(),
                    world.goals[i],
                    cfg.goal_radius,
                    &cfg.rewards,
                );
                t.colregs = colregs_term;
                t.collision = collision_term;
            }
        }
    }
    let rewards: Vec<f64> = terms.iter().map(RewardTerms::total).collect();

    // Termination.
    world.step_index += 1;
    let all_at_goal = world
        .ships
        .iter()
        .zip(&world.goals)
        .all(|(s, g)| dist(s.position(), *g) < cfg.goal_radius);
    let done = failure.is_some() || world.step_index >= cfg.max_steps || all_at_goal;
    world.done = done;

    let observations = observe_all(&world, cfg)?;
    Ok(StepOutcome {
        world,
        observations,
        rewards,
        terms,
        done,
        reached_goals: all_at_goal,
        failure,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    fn nav_cfg() -> WorldConfig {
        WorldConfig::navigation()
    }

    fn avoid_cfg() -> WorldConfig {
        WorldConfig::avoidance()
    }

    #[test]
    fn zero_length_episode_config_is_rejected() {
        let mut cfg = nav_cfg();
        cfg.max_steps = 0;
        assert!(matches!(cfg.validate(), Err(ScenarioError::BadConfig(_))));
    }

    #[test]
    fn same_seed_gives_identical_world() {
        for cfg in [nav_cfg(), avoid_cfg()] {
            let a = reset(&cfg, &mut rng(7)).unwrap();
            let b = reset(&cfg, &mut rng(7)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn navigation_landmarks_keep_their_distance() {
        let cfg = nav_cfg();
        let mut r = rng(1);
        for _ in 0..50 {
            let ws = reset(&cfg, &mut r).unwrap();
            for i in 0..ws.landmarks.len() {
                for j in i + 1..ws.landmarks.len() {
                    assert!(
                        dist(ws.landmarks[i].position, ws.landmarks[j].position)
                            >= 2.0 * cfg.goal_radius
                    );
                }
            }
        }
    }

    #[test]
    fn speaker_sees_one_hot_target() {
        let cfg = nav_cfg();
        let mut r = rng(2);
        let mut ws = reset(&cfg, &mut r).unwrap();
        ws.target_color = 1;
        let obs = observe(&ws, &cfg, cfg.n_ships).unwrap();
        assert_eq!(obs.0, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn fresh_inbox_is_zero() {
        let cfg = nav_cfg();
        let ws = reset(&cfg, &mut rng(3)).unwrap();
        let obs = observe(&ws, &cfg, 0).unwrap();
        let layout = cfg.observation_layout(0).unwrap();
        let msg = layout.last().unwrap();
        assert_eq!(msg.name, "message");
        for i in 0..msg.len {
            assert_eq!(obs.0[msg.start + i], 0.0);
        }
    }

    #[test]
    fn landmark_dead_ahead_reads_distance_ten_bearing_zero() {
        let cfg = nav_cfg();
        let mut ws = reset(&cfg, &mut rng(4)).unwrap();
        ws.ships[0] = ShipState {
            u: 3.0,
            ..ShipState::at_rest()
        };
        ws.landmarks[0].position = [10.0, 0.0];
        let obs = observe(&ws, &cfg, 0).unwrap();
        // bearings live at [4 .. 4+M), distances at [4+M .. 4+2M)
        assert!(obs.0[4].abs() < 1e-12);
        assert!((obs.0[4 + cfg.n_landmarks] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn observation_dims_match_layout() {
        let nav = nav_cfg();
        assert_eq!(nav.observation_dim(0).unwrap(), 12);
        assert_eq!(nav.observation_dim(1).unwrap(), 3);
        let avoid = avoid_cfg();
        assert_eq!(avoid.observation_dim(0).unwrap(), 10);
        let ws = reset(&avoid, &mut rng(5)).unwrap();
        for agent in 0..avoid.n_agents() {
            let obs = observe(&ws, &avoid, agent).unwrap();
            assert_eq!(obs.0.len(), avoid.observation_dim(agent).unwrap());
        }
    }

    #[test]
    fn message_arrives_exactly_one_step_late() {
        let cfg = nav_cfg();
        let mut r = rng(6);
        let ws = reset(&cfg, &mut r).unwrap();

        // Nothing visible while the inbox is still fresh.
        let obs_before = observe(&ws, &cfg, 0).unwrap();
        let n = obs_before.0.len();
        assert_eq!(&obs_before.0[n - 2..], &[0.0, 0.0]);

        let sent = vec![0.42, -0.17];
        let actions = vec![Action(vec![60.0, 0.0]), Action(sent.clone())];
        let out = step_env(&ws, &actions, &cfg, &mut r).unwrap();
        // Lossless channel: the next observation carries the message.
        let obs = &out.observations[0];
        assert_eq!(&obs.0[n - 2..], &sent[..]);
    }

    #[test]
    fn avoidance_rewards_decompose_exactly() {
        let cfg = avoid_cfg();
        let mut r = rng(8);
        let mut ws = reset(&cfg, &mut r).unwrap();
        let actions = vec![
            Action(vec![100.0, 0.3, 0.1, -0.2, 0.9]),
            Action(vec![100.0, -0.1, 0.0, 0.0, 0.0]),
        ];
        for _ in 0..10 {
            let out = step_env(&ws, &actions, &cfg, &mut r).unwrap();
            for (reward, terms) in out.rewards.iter().zip(&out.terms) {
                assert_eq!(*reward, terms.total());
            }
            ws = out.world;
            if ws.done {
                break;
            }
        }
    }

    #[test]
    fn episode_never_exceeds_max_steps() {
        let cfg = avoid_cfg();
        let mut r = rng(9);
        let mut ws = reset(&cfg, &mut r).unwrap();
        let actions = vec![
            Action(vec![0.0, 0.0, 0.0, 0.0, 0.0]),
            Action(vec![0.0, 0.0, 0.0, 0.0, 0.0]),
        ];
        let mut steps = 0;
        loop {
            let out = step_env(&ws, &actions, &cfg, &mut r).unwrap();
            steps += 1;
            ws = out.world;
            if out.done {
                break;
            }
        }
        assert_eq!(steps, cfg.max_steps);
    }

    #[test]
    fn encounter_families_are_roughly_uniform() {
        let cfg = avoid_cfg();
        let mut r = rng(10);
        let mut counts = [0usize; 3];
        let n = 3000;
        for _ in 0..n {
            let ws = reset(&cfg, &mut r).unwrap();
            counts[ws.encounter.unwrap().0.family()] += 1;
        }
        for c in counts {
            let f = c as f64 / n as f64;
            assert!((0.30..=0.37).contains(&f), "family frequency {f}");
        }
    }

    #[test]
    fn forced_give_way_puts_ship_zero_on_the_hook() {
        let mut cfg = avoid_cfg();
        cfg.force_give_way_first = true;
        let mut r = rng(11);
        for _ in 0..200 {
            let ws = reset(&cfg, &mut r).unwrap();
            let (_, give_way) = ws.encounter.unwrap();
            assert_ne!(give_way, GiveWay::Ship(1));
        }
    }

    #[test]
    fn fixed_standon_ship_keeps_her_course() {
        let mut cfg = avoid_cfg();
        cfg.fixed_standon = true;
        cfg.force_give_way_first = true;
        let mut r = rng(12);
        let mut ws = reset(&cfg, &mut r).unwrap();
        let actions = vec![
            Action(vec![120.0, 0.4, 0.5, 0.5, 0.5]),
            Action(vec![0.9, -0.9, 0.3]), // message only
        ];
        for _ in 0..5 {
            let out = step_env(&ws, &actions, &cfg, &mut r).unwrap();
            ws = out.world;
            assert_eq!(ws.ships[1].delta, 0.0);
            if ws.done {
                break;
            }
        }
    }

    #[test]
    fn action_length_is_checked() {
        let cfg = nav_cfg();
        let mut r = rng(13);
        let ws = reset(&cfg, &mut r).unwrap();
        let actions = vec![Action(vec![60.0]), Action(vec![0.0, 0.0])];
        assert!(matches!(
            step_env(&ws, &actions, &cfg, &mut r),
            Err(ScenarioError::ActionLength { .. })
        ));
    }

    #[test]
    fn wrap_angle_basics() {
        use std::f64::consts::PI;
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(0.1) - 0.1).abs() < 1e-15);
        assert!(wrap_angle(PI + 0.1) < 0.0);
    }
}
