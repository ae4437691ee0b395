use super::tensor::Param;
use crate::error::{Error, Result};

/// Adam optimiser state with bias correction.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(lr: f64) -> Self {
        Self::with_hyperparameters(lr, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyperparameters(lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            lr,
            beta1,
            beta2,
            eps,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn moments(&self) -> (&[Vec<f64>], &[Vec<f64>]) {
        (&self.first, &self.second)
    }
}

/// One Adam update of `params` from their accumulated gradients.
///
/// Moment buffers are allocated on the first call; later calls must pass
/// parameters of the same shapes in the same order.
pub fn adam_step(params: &mut [&mut Param], state: &mut AdamState) -> Result<()> {
    if state.first.is_empty() {
        state.first = params.iter().map(|p| vec![0.0; p.len()]).collect();
        state.second = state.first.clone();
    }
    if state.first.len() != params.len() {
        return Err(Error::shape("adam_step", &[state.first.len()], &[params.len()]));
    }
    for (m, p) in state.first.iter().zip(params.iter()) {
        if m.len() != p.len() || p.grad.len() != p.len() {
            return Err(Error::shape("adam_step", &[m.len()], &[p.len()]));
        }
    }
    state.step += 1;
    let t = state.step as f64;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powf(t);
    let c2 = 1.0 - b2.powf(t);
    for ((p, m), v) in params
        .iter_mut()
        .zip(state.first.iter_mut())
        .zip(state.second.iter_mut())
    {
        let Param { value, grad } = &mut **p;
        for (((w, g), m), v) in value
            .data_mut()
            .iter_mut()
            .zip(grad.iter())
            .zip(m.iter_mut())
            .zip(v.iter_mut())
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *w -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
        }
    }
    Ok(())
}

/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(params: &mut [&mut Param], max_norm: f64) -> f64 {
    let norm = params
        .iter()
        .flat_map(|p| p.grad.iter())
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for p in params.iter_mut() {
            p.grad.iter_mut().for_each(|g| *g *= scale);
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    fn param(values: &[f64]) -> Param {
        Param::new(Tensor::new(vec![values.len()], values.to_vec()).unwrap())
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = param(&[1.0, -2.0]);
        let mut st = AdamState::new(1e-3);
        adam_step(&mut [&mut p], &mut st).unwrap();
        assert_eq!(p.value.data(), &[1.0, -2.0]);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        for g in [0.5, -3.0, 0.1] {
            let mut p = param(&[0.0]);
            p.grad = vec![g];
            let mut st = AdamState::new(1e-3);
            adam_step(&mut [&mut p], &mut st).unwrap();
            let expected = -1e-3 * g.signum();
            assert!((p.value.data()[0] - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn quadratic_bowl_converges() {
        // f(w) = sum (w_i - c_i)^2
        let target = [0.3, -0.7, 0.05];
        let mut p = param(&[0.0, 0.0, 0.0]);
        let mut st = AdamState::new(0.01);
        for _ in 0..500 {
            p.grad = p
                .value
                .data()
                .iter()
                .zip(&target)
                .map(|(w, c)| 2.0 * (w - c))
                .collect();
            adam_step(&mut [&mut p], &mut st).unwrap();
        }
        for (w, c) in p.value.data().iter().zip(&target) {
            assert!((w - c).abs() < 1e-3, "{w} vs {c}");
        }
    }

    #[test]
    fn shape_change_is_rejected() {
        let mut p = param(&[0.0, 0.0]);
        let mut st = AdamState::new(1e-3);
        adam_step(&mut [&mut p], &mut st).unwrap();
        let mut q = param(&[0.0]);
        assert!(adam_step(&mut [&mut q], &mut st).is_err());
    }

    #[test]
    fn clipping_bounds_norm() {
        let mut p = param(&[0.0, 0.0]);
        p.grad = vec![3.0, 4.0];
        let n = clip_grad_norm(&mut [&mut p], 1.0);
        assert_eq!(n, 5.0);
        assert!((p.grad[0] - 0.6).abs() < 1e-12 && (p.grad[1] - 0.8).abs() < 1e-12);
    }
}
