//! Butterworth band-pass design as a biquad cascade and forward-backward
//! (zero-phase) filtering.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Second-order section `(b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    pub fn response(&self, omega: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -omega);
        let z2 = z1 * z1;
        (self.b0 + z1 * self.b1 + z2 * self.b2) / (1.0 + z1 * self.a1 + z2 * self.a2)
    }

    /// Both poles strictly inside the unit circle.
    pub fn is_stable(&self) -> bool {
        // Jury conditions for a monic quadratic
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }

    fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiquadCascade {
    pub sections: Vec<Biquad>,
    pub fs: f64,
    pub band: (f64, f64),
    pub order: usize,
}

/// Parameters for the preprocessing band-pass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    pub order: usize,
    pub low_hz: f64,
    pub high_hz: f64,
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self {
            order: 6,
            low_hz: 0.5,
            high_hz: 40.0,
        }
    }
}

impl BiquadCascade {
    /// Complex response at `freq_hz`.
    pub fn response(&self, freq_hz: f64) -> Complex64 {
        let omega = 2.0 * PI * freq_hz / self.fs;
        self.sections
            .iter()
            .map(|s| s.response(omega))
            .fold(Complex64::new(1.0, 0.0), |acc, h| acc * h)
    }

    /// Single-pass magnitude at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        self.response(freq_hz).norm()
    }

    /// Runs the cascade once over `x` in direct form II transposed, starting
    /// from `state` (two values per section), which is updated in place.
    pub fn filter_with_state(&self, x: &[f64], state: &mut [f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for (s, z) in self.sections.iter().zip(state.chunks_exact_mut(2)) {
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b0 * input + z[0];
                z[0] = s.b1 * input - s.a1 * out + z[1];
                z[1] = s.b2 * input - s.a2 * out;
                *v = out;
            }
        }
        y
    }

    /// Steady-state section states for a unit step at the input.
    pub fn step_state(&self) -> Vec<f64> {
        let mut scale = 1.0;
        let mut zi = Vec::with_capacity(2 * self.sections.len());
        for s in &self.sections {
            let g = s.dc_gain();
            let z2 = s.b2 - s.a2 * g;
            let z1 = s.b1 - s.a1 * g + z2;
            zi.push(z1 * scale);
            zi.push(z2 * scale);
            scale *= g;
        }
        zi
    }

    /// Edge padding used by [`zero_phase_filter`].
    pub fn pad_len(&self) -> usize {
        3 * self.sections.len() * 2
    }
}

/// Digital Butterworth band-pass of total order `order` (a prototype of order
/// `order / 2`), designed through the bilinear transform with pre-warped
/// edges, so the single-pass response is -3 dB at `low` and `high` and unity
/// at the geometric centre.
pub fn design_butterworth_bandpass(order: usize, low: f64, high: f64, fs: f64) -> Result<BiquadCascade> {
    if ![2, 4, 6, 8].contains(&order) {
        return Err(Error::InvalidArgument(format!(
            "band-pass order must be one of 2, 4, 6, 8 (got {order})"
        )));
    }
    if !(fs > 0.0 && low > 0.0 && low < high && high < fs / 2.0) {
        return Err(Error::InvalidArgument(format!(
            "band edges must satisfy 0 < low < high < fs/2 (low {low}, high {high}, fs {fs})"
        )));
    }
    let n = order / 2;
    let warp = |f: f64| 2.0 * fs * (PI * f / fs).tan();
    let (w1, w2) = (warp(low), warp(high));
    let w0 = (w1 * w2).sqrt();
    let bw = w2 - w1;
    let two_fs = 2.0 * fs;

    let mut poles = Vec::with_capacity(2 * n);
    for k in 0..n {
        let theta = PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
        let p = Complex64::from_polar(1.0, theta);
        let pb = p * bw;
        let disc = (pb * pb - 4.0 * w0 * w0).sqrt();
        for s in [(pb + disc) / 2.0, (pb - disc) / 2.0] {
            poles.push((two_fs + s) / (two_fs - s));
        }
    }

    let tol = 1e-10;
    let mut sections = Vec::with_capacity(n);
    let mut reals: Vec<f64> = Vec::new();
    for p in &poles {
        if p.im > tol {
            sections.push(Biquad {
                b0: 1.0,
                b1: 0.0,
                b2: -1.0,
                a1: -2.0 * p.re,
                a2: p.norm_sqr(),
            });
        } else if p.im.abs() <= tol {
            reals.push(p.re);
        }
    }
    reals.sort_by(f64::total_cmp);
    for pair in reals.chunks(2) {
        let (r1, r2) = (pair[0], *pair.get(1).unwrap_or(&0.0));
        sections.push(Biquad {
            b0: 1.0,
            b1: 0.0,
            b2: -1.0,
            a1: -(r1 + r2),
            a2: r1 * r2,
        });
    }
    if sections.len() != n || sections.iter().any(|s| !s.is_stable()) {
        return Err(Error::Degenerate(format!(
            "unstable or incomplete band-pass design ({} sections)",
            sections.len()
        )));
    }

    let mut cascade = BiquadCascade {
        sections,
        fs,
        band: (low, high),
        order,
    };
    let centre = fs / PI * (w0 / two_fs).atan();
    let gain = cascade.magnitude(centre);
    let per_section = gain.powf(-1.0 / n as f64);
    for s in &mut cascade.sections {
        s.b0 *= per_section;
        s.b2 *= per_section;
    }
    Ok(cascade)
}

/// Forward-backward filtering with odd-reflection edge padding and
/// steady-state initial conditions; the result has magnitude `|H|^2` and no
/// phase shift.
pub fn zero_phase_filter(x: &[f64], filt: &BiquadCascade) -> Result<Vec<f64>> {
    let pad = filt.pad_len();
    if x.len() <= pad {
        return Err(Error::SignalTooShort { len: x.len(), min: pad });
    }
    let n = x.len();
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

    let zi = filt.step_state();
    let mut state: Vec<f64> = zi.iter().map(|z| z * ext[0]).collect();
    let mut y = filt.filter_with_state(&ext, &mut state);
    y.reverse();
    let mut state: Vec<f64> = zi.iter().map(|z| z * y[0]).collect();
    let mut y = filt.filter_with_state(&y, &mut state);
    y.reverse();
    Ok(y[pad..pad + n].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Analogue Butterworth band-pass magnitude evaluated through the
    /// bilinear frequency map; independent of the pole/biquad route.
    fn analytic_magnitude(order: usize, low: f64, high: f64, fs: f64, f: f64) -> f64 {
        let warp = |f: f64| 2.0 * fs * (PI * f / fs).tan();
        let (w1, w2) = (warp(low), warp(high));
        let (w0sq, bw) = (w1 * w2, w2 - w1);
        let w = warp(f);
        let ratio = (w * w - w0sq) / (w * bw);
        1.0 / (1.0 + ratio.powi(order as i32)).sqrt()
    }

    #[test]
    fn sixth_order_has_three_stable_sections() {
        let c = design_butterworth_bandpass(6, 0.5, 40.0, 100.0).unwrap();
        assert_eq!(c.sections.len(), 3);
        assert!(c.sections.iter().all(Biquad::is_stable));
    }

    #[test]
    fn magnitude_matches_analytic_response() {
        for order in [2, 4, 6, 8] {
            let c = design_butterworth_bandpass(order, 0.5, 40.0, 100.0).unwrap();
            for f in [0.1, 0.5, 1.0, 5.0, 10.0, 20.0, 35.0, 40.0, 45.0, 49.0] {
                let got = c.magnitude(f);
                let want = analytic_magnitude(order, 0.5, 40.0, 100.0, f);
                assert!((got - want).abs() < 1e-9, "order {order} f {f}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn passband_and_stopband_levels() {
        let c = design_butterworth_bandpass(6, 0.5, 40.0, 100.0).unwrap();
        let g20 = c.magnitude(20.0);
        assert!((0.99..=1.0 + 1e-12).contains(&g20), "{g20}");
        assert!(20.0 * c.magnitude(50.0 - 1e-9).log10() <= -18.0);
        assert!((c.magnitude(0.5) - 0.5f64.sqrt()).abs() < 1e-9);
        assert!((c.magnitude(40.0) - 0.5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(design_butterworth_bandpass(6, 0.5, 50.0, 100.0).is_err());
        assert!(design_butterworth_bandpass(6, 10.0, 5.0, 100.0).is_err());
        assert!(design_butterworth_bandpass(5, 1.0, 5.0, 100.0).is_err());
    }

    #[test]
    fn too_short_signal_is_rejected() {
        let c = design_butterworth_bandpass(6, 0.5, 40.0, 100.0).unwrap();
        assert!(matches!(
            zero_phase_filter(&[0.0; 18], &c),
            Err(Error::SignalTooShort { .. })
        ));
        assert!(zero_phase_filter(&[0.0; 19], &c).is_ok());
    }

    #[test]
    fn output_length_matches_input() {
        let c = design_butterworth_bandpass(6, 0.5, 40.0, 100.0).unwrap();
        let x: Vec<f64> = (0..777).map(|i| (i as f64 * 0.1).sin()).collect();
        assert_eq!(zero_phase_filter(&x, &c).unwrap().len(), 777);
    }
}
