//! Minimal neural toolkit: dense networks with exact analytic gradients,
//! Adam, Ornstein-Uhlenbeck noise and bit-exact checkpoints.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod mlp;
pub mod ou;

pub use adam::{adam_step, AdamOutcome, AdamState};
pub use checkpoint::{Checkpoint, CheckpointBuilder, CheckpointError};
pub use gradcheck::{
    check_gradients, check_gradients_sampled, sample_well_conditioned_case, GradCheckReport,
};
pub use mlp::{
    soft_update, BatchCache, GumbelCtx, HeadKind, HeadSegment, LayerParams, MlpGrads, MlpParams,
    NeuralError,
};
pub use ou::{ou_sample, OuState};
