//! Minimal reverse-mode differentiation: tensors, layers with hand-written
//! backward passes, Adam, finite-difference checking and checkpoints.

mod adam;
mod checkpoint;
mod conv;
mod gradcheck;
mod layers;
mod rng;
mod tensor;

pub use adam::{adam_step, clip_grad_norm, AdamState};
pub use checkpoint::{Checkpoint, LayerBlock};
pub use conv::{Conv1d, ConvTranspose1d, Geometry};
pub use gradcheck::{
    grad_check, grad_check_layer, relative_error, GradCheckReport, LayerObjective, Objective,
    REFINE_THRESHOLD, REL_ERROR_FLOOR,
};
pub use layers::{Dense, DepthwiseConv1d, Layer, LayerSpec, Mode, Padding, SpatialDropout, Tanh};
pub use rng::SeededRng;
pub use tensor::{Param, Tensor};
