use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward/inverse FFT pair of fixed length for real signals.
#[derive(Clone)]
pub struct RealFft {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for RealFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RealFft").field("n", &self.n).finish()
    }
}

impl RealFft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Number of one-sided bins, `n/2 + 1`.
    pub fn bins(&self) -> usize {
        self.n / 2 + 1
    }

    /// One-sided spectrum `X_k = sum_n x_n e^{-2 pi i k n / N}`, `k = 0..=N/2`.
    pub fn forward(&self, x: &[f64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf.truncate(self.bins());
        buf
    }

    /// Adjoint of `x -> (Re X, Im X)` restricted to real inputs: with
    /// `a_k = dL/dRe X_k + i dL/dIm X_k`, returns `g = dL/dx`, i.e.
    /// `g_n = sum_k Re(a_k) cos(2 pi k n / N) - Im(a_k) sin(2 pi k n / N)`.
    pub fn adjoint(&self, a: &[Complex64]) -> Vec<f64> {
        assert_eq!(a.len(), self.bins());
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n];
        buf[..a.len()].copy_from_slice(a);
        self.inverse.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }
}
