//! Central finite-difference verification of analytic gradients.

use super::layers::{Layer, Mode};
use super::rng::SeededRng;
use super::tensor::{Param, Tensor};
use crate::error::Result;

/// Denominator floor for relative errors, so entries whose true gradient is
/// zero are judged on absolute error.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Scalar objective over a set of parameters.
pub trait Objective {
    fn params_mut(&mut self) -> Vec<&mut Param>;

    /// Loss at the current parameter values. With `backprop`, parameter
    /// gradients are reset and then filled for this evaluation.
    fn loss(&mut self, backprop: bool) -> Result<f64>;
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(param index, entry index)` of the worst entry.
    pub worst: (usize, usize),
    pub checked: usize,
}

/// Relative error below which a plain central difference is accepted
/// without refinement.
pub const REFINE_THRESHOLD: f64 = 1e-6;

fn central(obj: &mut dyn Objective, pi: usize, j: usize, h: f64) -> Result<f64> {
    let orig = obj.params_mut()[pi].value.data()[j];
    obj.params_mut()[pi].value.data_mut()[j] = orig + h;
    let plus = obj.loss(false)?;
    obj.params_mut()[pi].value.data_mut()[j] = orig - h;
    let minus = obj.loss(false)?;
    obj.params_mut()[pi].value.data_mut()[j] = orig;
    Ok((plus - minus) / (2.0 * h))
}

/// Compares every analytic gradient entry of `obj` with a central difference.
/// `stride > 1` checks every `stride`-th entry of each parameter.
///
/// Entries whose plain estimate disagrees by more than [`REFINE_THRESHOLD`]
/// are re-estimated by Richardson extrapolation, `(4 D(eps/2) - D(eps)) / 3`,
/// which removes the second-order truncation term of the central difference
/// but amplifies round-off. The closer of the two estimates is kept: a
/// curved loss favours the extrapolation, a locally linear one the plain
/// difference.
pub fn grad_check(obj: &mut dyn Objective, eps: f64, stride: usize) -> Result<GradCheckReport> {
    obj.loss(true)?;
    let analytic: Vec<Vec<f64>> = obj.params_mut().iter().map(|p| p.grad.clone()).collect();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: (0, 0),
        checked: 0,
    };
    for (pi, grads) in analytic.iter().enumerate() {
        for j in (0..grads.len()).step_by(stride.max(1)) {
            let coarse = central(obj, pi, j, eps)?;
            let mut err = relative_error(grads[j], coarse);
            if err > REFINE_THRESHOLD {
                let fine = central(obj, pi, j, eps / 2.0)?;
                err = err.min(relative_error(grads[j], (4.0 * fine - coarse) / 3.0));
            }
            report.checked += 1;
            if err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst = (pi, j);
            }
        }
    }
    Ok(report)
}

/// Wraps one layer and one input; the loss is a fixed random projection of
/// the layer output, and the input is checked alongside the parameters.
pub struct LayerObjective<'a> {
    pub layer: &'a mut dyn Layer,
    pub input: Param,
    pub mode: Mode,
    pub seed: u64,
    projection: Option<Vec<f64>>,
}

impl<'a> LayerObjective<'a> {
    pub fn new(layer: &'a mut dyn Layer, input: Tensor, mode: Mode, seed: u64) -> Self {
        Self {
            layer,
            input: Param::new(input),
            mode,
            seed,
            projection: None,
        }
    }
}

impl Objective for LayerObjective<'_> {
    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut ps = self.layer.params_mut();
        ps.push(&mut self.input);
        ps
    }

    fn loss(&mut self, backprop: bool) -> Result<f64> {
        // fresh stream per evaluation so stochastic layers repeat their draws
        let mut rng = SeededRng::new(self.seed);
        let y = self.layer.forward(&self.input.value, self.mode, &mut rng)?;
        let proj = self.projection.get_or_insert_with(|| {
            let mut r = SeededRng::new(self.seed).fork(0xC0FFEE);
            (0..y.len()).map(|_| r.normal()).collect()
        });
        let loss = y.data().iter().zip(proj.iter()).map(|(a, b)| a * b).sum();
        if backprop {
            self.layer.zero_grad();
            let dy = Tensor::new(y.shape().to_vec(), proj.clone())?;
            self.input.grad = self.layer.backward(&dy)?.into_data();
        }
        Ok(loss)
    }
}

/// Convenience wrapper: full check of one layer at one input.
pub fn grad_check_layer(
    layer: &mut dyn Layer,
    input: Tensor,
    mode: Mode,
    seed: u64,
    eps: f64,
) -> Result<GradCheckReport> {
    let mut obj = LayerObjective::new(layer, input, mode, seed);
    grad_check(&mut obj, eps, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{
        Conv1d, ConvTranspose1d, Dense, DepthwiseConv1d, Padding, SpatialDropout, Tanh,
    };

    fn input(shape: &[usize], seed: u64) -> Tensor {
        let mut r = SeededRng::new(seed);
        let n = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..n).map(|_| r.normal()).collect()).unwrap()
    }

    #[test]
    fn dense_gradients() {
        let mut l = Dense::new(5, 3, &mut SeededRng::new(1));
        let r = grad_check_layer(&mut l, input(&[2, 4, 5], 2), Mode::Eval, 3, 1e-5).unwrap();
        assert!(r.max_rel_error < 1e-6, "{r:?}");
    }

    #[test]
    fn conv_gradients() {
        for (stride, sub) in [(1, None), (2, None), (1, Some(4)), (2, Some(4))] {
            let mut l = Conv1d::new(3, 4, 5, stride, Padding::Same, sub, &mut SeededRng::new(1));
            let r = grad_check_layer(&mut l, input(&[2, 16, 3], 2), Mode::Eval, 3, 1e-5).unwrap();
            assert!(r.max_rel_error < 1e-5, "stride {stride} sub {sub:?}: {r:?}");
        }
        let mut l = Conv1d::new(3, 2, 4, 1, Padding::Valid, None, &mut SeededRng::new(1));
        let r = grad_check_layer(&mut l, input(&[2, 9, 3], 2), Mode::Eval, 3, 1e-5).unwrap();
        assert!(r.max_rel_error < 1e-5, "{r:?}");
    }

    #[test]
    fn transposed_conv_gradients() {
        for (k, stride, pad, sub) in [
            (13, 2, Padding::Same, Some(8)),
            (4, 1, Padding::Valid, None),
            (5, 2, Padding::Same, None),
        ] {
            let mut l = ConvTranspose1d::new(3, 2, k, stride, pad, sub, &mut SeededRng::new(1));
            let r = grad_check_layer(&mut l, input(&[2, 8, 3], 2), Mode::Eval, 3, 1e-5).unwrap();
            assert!(r.max_rel_error < 1e-5, "{r:?}");
        }
    }

    #[test]
    fn depthwise_tanh_dropout_gradients() {
        let mut l = DepthwiseConv1d::new(3, 3, &mut SeededRng::new(1));
        let r = grad_check_layer(&mut l, input(&[2, 6, 3], 2), Mode::Eval, 3, 1e-5).unwrap();
        assert!(r.max_rel_error < 1e-5, "{r:?}");
        let mut t = Tanh::default();
        let r = grad_check_layer(&mut t, input(&[2, 6, 3], 2), Mode::Eval, 3, 1e-5).unwrap();
        assert!(r.max_rel_error < 1e-5, "{r:?}");
        let mut d = SpatialDropout::new(0.4);
        for mode in [Mode::Train, Mode::Eval] {
            let r = grad_check_layer(&mut d, input(&[3, 4, 5], 2), mode, 3, 1e-5).unwrap();
            assert!(r.max_rel_error < 1e-5, "{r:?}");
        }
    }
}
