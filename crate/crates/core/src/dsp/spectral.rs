//! Welch PSD, STFT magnitude spectrogram and band-power integration.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::fft::RealFft;
use crate::error::{Error, Result};

/// Canonical EEG bands in Hz: delta, theta, alpha, beta.
pub const EEG_BANDS: [(f64, f64); 4] = [(0.5, 4.0), (4.0, 8.0), (8.0, 12.0), (12.0, 30.0)];
pub const BAND_NAMES: [&str; 4] = ["delta", "theta", "alpha", "beta"];

pub const WELCH_SEGMENT: usize = 128;
pub const WELCH_OVERLAP: f64 = 0.5;
pub const STFT_WINDOW: usize = 64;
pub const STFT_HOP: usize = 16;

/// One-sided power spectral density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate {
    pub freqs: Vec<f64>,
    /// Power per bin (signal units squared per Hz).
    pub power: Vec<f64>,
    pub resolution: f64,
}

/// Magnitude STFT, `magnitude[frame][bin]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrogram {
    pub times: Vec<f64>,
    pub freqs: Vec<f64>,
    pub magnitude: Vec<Vec<f64>>,
}

impl Spectrogram {
    pub fn frames(&self) -> usize {
        self.magnitude.len()
    }

    pub fn bins(&self) -> usize {
        self.freqs.len()
    }
}

/// Periodic Hann window.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Averaged Hann-windowed periodograms with density scaling; no detrending.
pub fn welch_psd(x: &[f64], fs: f64, seg_len: usize, overlap: f64) -> Result<PsdEstimate> {
    if seg_len == 0 || seg_len > x.len() {
        return Err(Error::InvalidArgument(format!(
            "Welch segment of {seg_len} samples does not fit a signal of {} samples",
            x.len()
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::InvalidArgument(format!("overlap {overlap} outside [0, 1)")));
    }
    let step = (seg_len - (overlap * seg_len as f64).round() as usize).max(1);
    let window = hann(seg_len);
    let norm = fs * window.iter().map(|w| w * w).sum::<f64>();
    let plan = RealFft::new(seg_len);
    let mut power = vec![0.0; plan.bins()];
    let mut segments = 0usize;
    let mut start = 0;
    let mut buf = vec![0.0; seg_len];
    while start + seg_len <= x.len() {
        for ((b, v), w) in buf.iter_mut().zip(&x[start..start + seg_len]).zip(&window) {
            *b = v * w;
        }
        for (p, c) in power.iter_mut().zip(plan.forward(&buf)) {
            *p += c.norm_sqr();
        }
        segments += 1;
        start += step;
    }
    let last = plan.bins() - 1;
    for (k, p) in power.iter_mut().enumerate() {
        let one_sided = if k == 0 || (k == last && seg_len % 2 == 0) { 1.0 } else { 2.0 };
        *p *= one_sided / (norm * segments as f64);
    }
    let resolution = fs / seg_len as f64;
    Ok(PsdEstimate {
        freqs: (0..plan.bins()).map(|k| k as f64 * resolution).collect(),
        power,
        resolution,
    })
}

/// Welch PSD with the crate defaults (128-sample segments, 50% overlap),
/// shrinking the segment to the signal length for short inputs.
pub fn welch_default(x: &[f64], fs: f64) -> Result<PsdEstimate> {
    welch_psd(x, fs, WELCH_SEGMENT.min(x.len()), WELCH_OVERLAP)
}

/// Hann-windowed magnitude STFT. Magnitudes are amplitude-scaled so a
/// sinusoid of amplitude `A` centred on a bin reads `A`.
pub fn stft_spectrogram(x: &[f64], fs: f64, win: usize, hop: usize) -> Result<Spectrogram> {
    if win == 0 || hop == 0 || win > x.len() {
        return Err(Error::InvalidArgument(format!(
            "STFT window {win} / hop {hop} yields no frames for {} samples",
            x.len()
        )));
    }
    let frames = (x.len() - win) / hop + 1;
    let window = hann(win);
    let wsum: f64 = window.iter().sum();
    let plan = RealFft::new(win);
    let last = plan.bins() - 1;
    let mut magnitude = Vec::with_capacity(frames);
    let mut buf = vec![0.0; win];
    for f in 0..frames {
        let seg = &x[f * hop..f * hop + win];
        for ((b, v), w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = v * w;
        }
        let row = plan
            .forward(&buf)
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let scale = if k == 0 || (k == last && win % 2 == 0) { 1.0 } else { 2.0 };
                scale * c.norm() / wsum
            })
            .collect();
        magnitude.push(row);
    }
    Ok(Spectrogram {
        times: (0..frames)
            .map(|f| (f * hop) as f64 / fs + win as f64 / (2.0 * fs))
            .collect(),
        freqs: (0..plan.bins()).map(|k| k as f64 * fs / win as f64).collect(),
        magnitude,
    })
}

pub fn stft_default(x: &[f64], fs: f64) -> Result<Spectrogram> {
    stft_spectrogram(x, fs, STFT_WINDOW, STFT_HOP)
}

/// Exact integral of the piecewise-linear interpolant of `(freqs, power)`
/// over `[lo, hi]`.
pub fn integrate_band(freqs: &[f64], power: &[f64], lo: f64, hi: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..freqs.len().saturating_sub(1) {
        let (f0, f1) = (freqs[i], freqs[i + 1]);
        let a = f0.max(lo);
        let b = f1.min(hi);
        if b <= a {
            continue;
        }
        let interp = |f: f64| power[i] + (power[i + 1] - power[i]) * (f - f0) / (f1 - f0);
        total += 0.5 * (interp(a) + interp(b)) * (b - a);
    }
    total
}

/// Band integrals normalised by the power over the union of the bands, so
/// contiguous bands sum to one.
pub fn relative_band_power(psd: &PsdEstimate, bands: &[(f64, f64)]) -> Result<Vec<f64>> {
    let fmax = *psd.freqs.last().unwrap_or(&0.0);
    if bands.iter().any(|&(lo, hi)| lo < 0.0 || hi > fmax || lo >= hi) {
        return Err(Error::InvalidArgument(format!(
            "bands {bands:?} fall outside the PSD range 0..{fmax} Hz"
        )));
    }
    let lo = bands.iter().map(|b| b.0).fold(f64::INFINITY, f64::min);
    let hi = bands.iter().map(|b| b.1).fold(f64::NEG_INFINITY, f64::max);
    let total = integrate_band(&psd.freqs, &psd.power, lo, hi);
    if total <= 0.0 {
        return Err(Error::Degenerate("total band power is zero".into()));
    }
    Ok(bands
        .iter()
        .map(|&(a, b)| integrate_band(&psd.freqs, &psd.power, a, b) / total)
        .collect())
}
