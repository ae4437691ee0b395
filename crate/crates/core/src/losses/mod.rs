//! Reconstruction and latent losses with hand-written gradients.

mod composite;
mod latent;
mod signal;

pub use composite::{
    batch_loss, total_loss, uncertainty_weight, BatchLoss, LatentBatch, LatentRegularizer,
    LossBreakdown, LossWeights, TotalGrad,
};
pub use latent::{
    kld, kld_grad, random_directions, standard_normal_sample, swd, swd_grad, swd_with_reference,
    SWD_PROJECTIONS,
};
pub use signal::{
    magnitude_mse, magnitude_mse_grad, mobility_loss, mobility_loss_grad, phase_mse,
    phase_mse_grad, spectral_losses, temporal_mse, temporal_mse_grad,
};

/// Global gradient-norm ceiling applied during training.
pub const GRAD_CLIP_NORM: f64 = 5.0;
