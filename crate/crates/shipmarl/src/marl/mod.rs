//! MADDPG trainer with centralized critics and decentralized actors,
//! plus the independent-DDPG and blocked-communication ablations.

pub mod agents;
pub mod buffer;
pub mod evaluate;
pub mod trainer;

use thiserror::Error;

pub use agents::{AgentNets, AgentSpec};
pub use buffer::{Experience, ReplayBuffer};
pub use evaluate::{evaluate, evaluate_policy, EvalOptions, GreedyPolicy, JointPolicy};
pub use trainer::{CurvePoint, Maddpg, TrainConfig, TrainReport};

#[derive(Debug, Error)]
pub enum MarlError {
    #[error("neural error: {0}")]
    Neural(#[from] crate::neural::NeuralError),
    #[error("scenario error: {0}")]
    Scenario(#[from] crate::scenarios::ScenarioError),
    #[error("checkpoint error: {0}")]
    Checkpoint(#[from] crate::neural::CheckpointError),
    #[error("log error: {0}")]
    Log(#[from] crate::scenarios::log::LogError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("configuration error: {0}")]
    Config(String),
}
