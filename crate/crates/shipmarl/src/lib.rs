//! Multi-agent reinforcement learning for cooperative ship control.
//!
//! The crate couples a 3-DOF MMG ship maneuvering model with a small
//! multi-agent deep deterministic policy gradient (MADDPG) stack so that
//! several vessels can learn to navigate and avoid collisions while
//! talking to each other over noisy channels.
//!
//! The main pieces:
//!
//! - [`dynamics`] — MMG surge/sway/yaw model, actuator lags, RK4 integrator
//! - [`channels`] — lossless / blocked / BSC / AWGN message channels
//! - [`scenarios`] — the cooperative navigation and collision avoidance
//!   environments (observation layouts, COLREGs logic, rewards)
//! - [`neural`] — dense networks with analytic gradients, Adam,
//!   Ornstein-Uhlenbeck exploration noise
//! - [`marl`] — replay buffer, per-agent actor/critic pairs, the training
//!   loop and deterministic evaluation
//! - [`baselines`] — PID heading autopilot and scripted policies
//! - [`analysis`] — metrics, Welch t-test, OLS regression, noise sweeps,
//!   communication-vector analysis
//! - [`config`] — run configuration files shared by the CLI and examples
//!
//! Most capabilities have a runnable demo under `examples/`; the `shipmarl`
//! binary exposes the same functionality as subcommands (`train`, `eval`,
//! `sweep-noise`, `analyze-comm`, `stats`).

pub mod analysis;
pub mod baselines;
pub mod channels;
pub mod config;
pub mod dynamics;
pub mod marl;
pub mod neural;
pub mod scenarios;
