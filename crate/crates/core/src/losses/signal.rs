//! Reconstruction losses on a single window, each with its gradient with
//! respect to the reconstruction.

use crate::dsp::{Complex64, RealFft};

/// Mean squared difference.
pub fn temporal_mse(x: &[f64], x_hat: &[f64]) -> f64 {
    temporal_mse_grad(x, x_hat).0
}

pub fn temporal_mse_grad(x: &[f64], x_hat: &[f64]) -> (f64, Vec<f64>) {
    assert_eq!(x.len(), x_hat.len());
    let n = x.len() as f64;
    let mut loss = 0.0;
    let grad = x
        .iter()
        .zip(x_hat)
        .map(|(a, b)| {
            let d = b - a;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    (loss / n, grad)
}

/// MSE between one-sided DFT magnitudes, each divided by the window length.
pub fn magnitude_mse(x: &[f64], x_hat: &[f64]) -> f64 {
    magnitude_mse_grad(&RealFft::new(x.len()), x, x_hat).0
}

pub fn magnitude_mse_grad(plan: &RealFft, x: &[f64], x_hat: &[f64]) -> (f64, Vec<f64>) {
    spectral_losses(plan, x, x_hat, true, false).0
}

/// Phase error `sum_k w_k wrap(arg Xh_k - arg X_k)^2` with weights
/// `w_k = |X_k| / sum |X|` taken from the true signal. Only complex bins
/// enter: the DC and Nyquist coefficients of a real signal are real, so
/// their phase is a sign that flips discontinuously at zero. Zero if `x`
/// has no mass in those bins.
pub fn phase_mse(x: &[f64], x_hat: &[f64]) -> f64 {
    phase_mse_grad(&RealFft::new(x.len()), x, x_hat).0
}

pub fn phase_mse_grad(plan: &RealFft, x: &[f64], x_hat: &[f64]) -> (f64, Vec<f64>) {
    spectral_losses(plan, x, x_hat, false, true).1
}

/// Magnitude and phase losses sharing one pair of transforms.
pub fn spectral_losses(
    plan: &RealFft,
    x: &[f64],
    x_hat: &[f64],
    want_mag: bool,
    want_phase: bool,
) -> ((f64, Vec<f64>), (f64, Vec<f64>)) {
    assert_eq!(x.len(), x_hat.len());
    let n = x.len() as f64;
    let xs = plan.forward(x);
    let hs = plan.forward(x_hat);
    let bins = xs.len() as f64;
    let zero = Complex64::new(0.0, 0.0);

    let mut mag = (0.0, Vec::new());
    if want_mag {
        let coeffs: Vec<Complex64> = xs
            .iter()
            .zip(&hs)
            .map(|(a, h)| {
                let d = (h.norm() - a.norm()) / n;
                mag.0 += d * d;
                let g = 2.0 * d / (bins * n);
                let r = h.norm();
                if r > 0.0 {
                    h * (g / r)
                } else {
                    zero
                }
            })
            .collect();
        mag.0 /= bins;
        mag.1 = plan.adjoint(&coeffs);
    }

    let mut phase = (0.0, Vec::new());
    if want_phase {
        let complex_bin = |k: usize| k > 0 && 2 * k != x.len();
        let total: f64 = xs.iter().enumerate().filter(|(k, _)| complex_bin(*k)).map(|(_, c)| c.norm()).sum();
        if total > 0.0 {
            let coeffs: Vec<Complex64> = xs
                .iter()
                .zip(&hs)
                .enumerate()
                .map(|(k, (a, h))| {
                    if !complex_bin(k) {
                        return zero;
                    }
                    let w = a.norm() / total;
                    let r2 = h.norm_sqr();
                    if w == 0.0 || r2 == 0.0 {
                        return zero;
                    }
                    // arg(h conj(a)) lies in (-pi, pi]
                    let dphi = (h * a.conj()).arg();
                    phase.0 += w * dphi * dphi;
                    // d arg h / d(Re, Im) = (-Im, Re) / |h|^2
                    let g = 2.0 * w * dphi / r2;
                    Complex64::new(-h.im * g, h.re * g)
                })
                .collect();
            phase.1 = plan.adjoint(&coeffs);
        } else {
            phase.1 = vec![0.0; x.len()];
        }
    }
    (mag, phase)
}

/// `(m(x) - m(x_hat))^2` with `m` the Hjorth mobility.
pub fn mobility_loss(x: &[f64], x_hat: &[f64]) -> f64 {
    mobility_loss_grad(x, x_hat).0
}

pub fn mobility_loss_grad(x: &[f64], x_hat: &[f64]) -> (f64, Vec<f64>) {
    assert_eq!(x.len(), x_hat.len());
    assert!(x.len() >= 3, "mobility needs at least 3 samples");
    let (m, _) = mobility_with_grad(x, false);
    let (mh, gh) = mobility_with_grad(x_hat, true);
    let diff = m - mh;
    let scale = -2.0 * diff;
    (diff * diff, gh.into_iter().map(|g| scale * g).collect())
}

fn mobility_with_grad(x: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let vx = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if vx == 0.0 {
        return (0.0, vec![0.0; n]);
    }
    let d: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let nd = d.len() as f64;
    let md = d.iter().sum::<f64>() / nd;
    let vd = d.iter().map(|v| (v - md).powi(2)).sum::<f64>() / nd;
    let m = (vd / vx).sqrt();
    if !want_grad || m == 0.0 {
        return (m, vec![0.0; n]);
    }
    // dm = (dVd / Vx - Vd dVx / Vx^2) / (2m)
    let mut grad: Vec<f64> = x
        .iter()
        .map(|v| -(vd / (vx * vx)) * 2.0 * (v - mean) / n as f64)
        .collect();
    for (j, dj) in d.iter().enumerate() {
        let g = 2.0 * (dj - md) / nd / vx;
        grad[j + 1] += g;
        grad[j] -= g;
    }
    grad.iter_mut().for_each(|g| *g /= 2.0 * m);
    (m, grad)
}
