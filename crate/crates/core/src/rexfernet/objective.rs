//! The full training loss of a model on one batch, as a finite-difference
//! checkable objective.

use super::blocks::ReferenceStats;
use super::model::Model;
use crate::autodiff::{Mode, Objective, Param, SeededRng, Tensor};
use crate::error::Result;
use crate::losses::{batch_loss, LatentBatch, LossBreakdown};

/// Loss of `model` reconstructing `target` from `input`. Every evaluation
/// replays the same random stream, so sampling noise, output gain and SWD
/// projections are identical between calls.
pub struct ModelObjective<'a> {
    pub model: &'a mut Model,
    pub input: Tensor,
    pub target: Tensor,
    pub refs: Vec<ReferenceStats>,
    pub mode: Mode,
    pub seed: u64,
    pub last: LossBreakdown,
}

impl<'a> ModelObjective<'a> {
    pub fn new(model: &'a mut Model, input: Tensor, target: Tensor, refs: Vec<ReferenceStats>, mode: Mode, seed: u64) -> Self {
        Self { model, input, target, refs, mode, seed, last: LossBreakdown::default() }
    }
}

/// One forward/loss/backward pass; returns the loss breakdown.
pub fn loss_and_backward(
    model: &mut Model,
    input: &Tensor,
    target: &Tensor,
    refs: &[ReferenceStats],
    mode: Mode,
    rng: &mut SeededRng,
    backprop: bool,
) -> Result<LossBreakdown> {
    let out = model.forward(input, refs, mode, rng)?;
    let cfg = model.config();
    let loss = batch_loss(
        target,
        &out.recon,
        LatentBatch { mu: &out.mu, log_var: &out.log_var, z: &out.z },
        cfg.variant.regularizer(),
        &model.loss_weights(),
        cfg.swd_projections,
        rng,
    )?;
    if backprop {
        model.backward(&loss.d_recon, &loss.d_mu, &loss.d_log_var, &loss.d_z)?;
        model.accumulate_loss_weight_grad(&loss.d_weights);
    }
    Ok(loss.breakdown)
}

impl Objective for ModelObjective<'_> {
    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.model.params_mut()
    }

    fn loss(&mut self, backprop: bool) -> Result<f64> {
        let mut rng = SeededRng::new(self.seed);
        if backprop {
            self.model.zero_grad();
        }
        self.last = loss_and_backward(self.model, &self.input, &self.target, &self.refs, self.mode, &mut rng, backprop)?;
        Ok(self.last.total)
    }
}
