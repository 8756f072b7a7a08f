//! Deterministic MMG 3-DOF ship maneuvering model.

pub mod model;
pub mod params;
pub mod turning;

use thiserror::Error;

pub use model::{
    actuator_step, compute_forces, integrate_step, integrate_step_with, kinematics, ActuatorStep,
    Command, HullForces, ShipState, DEFAULT_SUBSTEPS, MAX_SPEED,
};
pub use params::{HydroCoeffs, ShipParams};
pub use turning::{
    read_trajectory_csv, simulate_turning_circle, write_trajectory_csv, TimedState,
    TurningCircleReport,
};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("non-finite value in {0}")]
    NonFiniteInput(&'static str),
    #[error("ship parameter file error: {0}")]
    ParamsFile(String),
    #[error("invalid ship parameters: {0}")]
    BadParams(String),
    #[error("time step must be > 0 with at least one sub-step, got {0}")]
    BadTimeStep(f64),
    #[error("simulation diverged at state {0:?}")]
    Diverged(Box<ShipState>),
}
