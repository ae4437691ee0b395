//! Uncertainty weighting, the multiplicative total and batch evaluation.
//!
//! ```text
//! total = (mse_w + mag_w) * (mobility + 1) * (phase + 1) + latent
//! L_w   = exp(-s) * L + s
//! ```
//!
//! Every component is averaged over the batch before the coupling.

use serde::{Deserialize, Serialize};

use super::latent::{kld_grad, swd_grad};
use super::signal::{mobility_loss_grad, spectral_losses, temporal_mse_grad};
use crate::autodiff::{SeededRng, Tensor};
use crate::dsp::RealFft;
use crate::error::{Error, Result};

/// Trainable log-variance weights of the temporal and magnitude losses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub s_mse: f64,
    pub s_mag: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub mse: f64,
    pub mag: f64,
    pub phase: f64,
    pub mobility: f64,
    pub latent: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub const FIELDS: [&'static str; 6] = ["total", "mse", "mag", "phase", "mobility", "latent"];

    pub fn values(&self) -> [f64; 6] {
        [self.total, self.mse, self.mag, self.phase, self.mobility, self.latent]
    }

    /// Running sum helper for epoch averages.
    pub fn add_scaled(&mut self, other: &LossBreakdown, w: f64) {
        self.mse += w * other.mse;
        self.mag += w * other.mag;
        self.phase += w * other.phase;
        self.mobility += w * other.mobility;
        self.latent += w * other.latent;
        self.total += w * other.total;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatentRegularizer {
    Kld,
    Swd,
}

/// `(exp(-s) L + s, d/dL, d/ds)`.
pub fn uncertainty_weight(loss: f64, s: f64) -> (f64, f64, f64) {
    let e = (-s).exp();
    (e * loss + s, e, 1.0 - e * loss)
}

/// Partial derivatives of the total with respect to each input.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TotalGrad {
    pub mse: f64,
    pub mag: f64,
    pub phase: f64,
    pub mobility: f64,
    pub latent: f64,
    pub s_mse: f64,
    pub s_mag: f64,
}

/// Fills `parts.total` from the components and returns the partials.
pub fn total_loss(parts: &mut LossBreakdown, weights: &LossWeights) -> Result<TotalGrad> {
    let (mse_w, d_mse, ds_mse) = uncertainty_weight(parts.mse, weights.s_mse);
    let (mag_w, d_mag, ds_mag) = uncertainty_weight(parts.mag, weights.s_mag);
    let a = mse_w + mag_w;
    let p = parts.mobility + 1.0;
    let q = parts.phase + 1.0;
    parts.total = a * p * q + parts.latent;
    if !parts.total.is_finite() {
        let named = [
            ("mse", parts.mse),
            ("mag", parts.mag),
            ("phase", parts.phase),
            ("mobility", parts.mobility),
            ("latent", parts.latent),
            ("s_mse", weights.s_mse),
            ("s_mag", weights.s_mag),
        ];
        let component = named.iter().find(|(_, v)| !v.is_finite()).map_or("product", |(n, _)| n);
        return Err(Error::NonFinite { op: format!("total loss ({component})") });
    }
    Ok(TotalGrad {
        mse: d_mse * p * q,
        mag: d_mag * p * q,
        phase: a * p,
        mobility: a * q,
        latent: 1.0,
        s_mse: ds_mse * p * q,
        s_mag: ds_mag * p * q,
    })
}

/// Latent quantities produced by a forward pass.
#[derive(Clone, Copy, Debug)]
pub struct LatentBatch<'a> {
    pub mu: &'a Tensor,
    pub log_var: &'a Tensor,
    pub z: &'a Tensor,
}

#[derive(Clone, Debug)]
pub struct BatchLoss {
    pub breakdown: LossBreakdown,
    /// Gradient for the reconstruction, same layout as `x_hat`.
    pub d_recon: Vec<f64>,
    pub d_mu: Vec<f64>,
    pub d_log_var: Vec<f64>,
    pub d_z: Vec<f64>,
    pub d_weights: LossWeights,
}

/// Full loss of a `(batch, window)` reconstruction. The SWD reference and
/// directions are drawn from `rng`.
pub fn batch_loss(
    x: &Tensor,
    x_hat: &Tensor,
    latent: LatentBatch<'_>,
    regularizer: LatentRegularizer,
    weights: &LossWeights,
    projections: usize,
    rng: &mut SeededRng,
) -> Result<BatchLoss> {
    if x.shape() != x_hat.shape() {
        return Err(Error::shape("batch_loss", x.shape(), x_hat.shape()));
    }
    let (batch, w) = x.rows();
    let plan = RealFft::new(w);
    let inv_b = 1.0 / batch as f64;
    let mut parts = LossBreakdown::default();
    let mut g_mse = Vec::with_capacity(batch);
    let mut g_mag = Vec::with_capacity(batch);
    let mut g_ph = Vec::with_capacity(batch);
    let mut g_mob = Vec::with_capacity(batch);
    for (xr, hr) in x.data().chunks(w).zip(x_hat.data().chunks(w)) {
        let (l, g) = temporal_mse_grad(xr, hr);
        parts.mse += l * inv_b;
        g_mse.push(g);
        let ((lm, gm), (lp, gp)) = spectral_losses(&plan, xr, hr, true, true);
        parts.mag += lm * inv_b;
        parts.phase += lp * inv_b;
        g_mag.push(gm);
        g_ph.push(gp);
        let (l, g) = mobility_loss_grad(xr, hr);
        parts.mobility += l * inv_b;
        g_mob.push(g);
    }

    let (mut d_mu, mut d_log_var, mut d_z) = (
        vec![0.0; latent.mu.len()],
        vec![0.0; latent.log_var.len()],
        vec![0.0; latent.z.len()],
    );
    match regularizer {
        LatentRegularizer::Kld => {
            let (l, gm, gl) = kld_grad(latent.mu, latent.log_var)?;
            parts.latent = l;
            d_mu = gm;
            d_log_var = gl;
        }
        LatentRegularizer::Swd => {
            let (l, gz) = swd_grad(latent.z, rng, projections)?;
            parts.latent = l;
            d_z = gz;
        }
    }

    let tg = total_loss(&mut parts, weights)?;
    let mut d_recon = Vec::with_capacity(x.len());
    for b in 0..batch {
        for i in 0..w {
            d_recon.push(
                inv_b
                    * (tg.mse * g_mse[b][i]
                        + tg.mag * g_mag[b][i]
                        + tg.phase * g_ph[b][i]
                        + tg.mobility * g_mob[b][i]),
            );
        }
    }
    d_mu.iter_mut().chain(d_log_var.iter_mut()).chain(d_z.iter_mut()).for_each(|g| *g *= tg.latent);
    Ok(BatchLoss {
        breakdown: parts,
        d_recon,
        d_mu,
        d_log_var,
        d_z,
        d_weights: LossWeights { s_mse: tg.s_mse, s_mag: tg.s_mag },
    })
}
