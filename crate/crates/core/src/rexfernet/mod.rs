//! The reconstruction network: neighbourhood aggregation, sub-window
//! convolution encoder, fixed or sliding-window latent, base decoding,
//! sub-window decoder, linear head, outlier clipping and reference
//! rescaling.

mod blocks;
mod config;
mod model;
mod objective;

pub use blocks::{
    dropout_count, fold_frames, overlap_counts, remove_outlier, remove_outlier_backward,
    sample_latent, sample_latent_backward, scale_output, scale_output_backward,
    select_neighborhood_input, unfold_frames, NeighborStack, OutlierCache, ReferenceStats,
    ScaleCache,
};
pub use config::{count_parameters, ModelConfig, ParamBreakdown, StageKind, SubWindowSpec, Variant};
pub use model::{sidecar_path, ForwardOutput, Model, ModelSidecar, SIDECAR_FORMAT, SIDECAR_VERSION};
pub use objective::{loss_and_backward, ModelObjective};
