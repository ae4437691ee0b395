//! Scalar signal descriptors: Hjorth mobility, entropies and histogram PDFs.

use super::spectral::PsdEstimate;
use crate::error::{Error, Result};

pub const ENTROPY_BINS: usize = 64;
pub const PDF_BINS: usize = 64;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

pub fn std_dev(x: &[f64]) -> f64 {
    variance(x).sqrt()
}

/// `sqrt(Var(diff(x)) / Var(x))`; zero for a constant signal.
pub fn hjorth_mobility(x: &[f64]) -> Result<f64> {
    if x.len() < 3 {
        return Err(Error::SignalTooShort { len: x.len(), min: 2 });
    }
    let var = variance(x);
    if var == 0.0 {
        return Ok(0.0);
    }
    let diff: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    Ok((variance(&diff) / var).sqrt())
}

/// Natural-log Shannon entropy of a probability vector (`0 ln 0 = 0`).
pub fn shannon(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>()
}

/// Normalised histogram of `x` over `[lo, hi]` with `bins` equal bins;
/// samples outside the range land in the edge bins. A degenerate range puts
/// all mass in the first bin.
pub fn estimate_pdf(x: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if bins == 0 || x.len() < bins {
        return Err(Error::InvalidArgument(format!(
            "{} samples cannot fill {bins} histogram bins",
            x.len()
        )));
    }
    let mut counts = vec![0.0; bins];
    if hi <= lo {
        counts[0] = 1.0;
        return Ok(counts);
    }
    let width = (hi - lo) / bins as f64;
    for v in x {
        let idx = ((v - lo) / width).floor();
        let idx = if idx < 0.0 { 0 } else { (idx as usize).min(bins - 1) };
        counts[idx] += 1.0;
    }
    let n = x.len() as f64;
    counts.iter_mut().for_each(|c| *c /= n);
    Ok(counts)
}

/// Joint min/max of two signals, the shared support for paired PDFs.
pub fn shared_range(a: &[f64], b: &[f64]) -> (f64, f64) {
    a.iter().chain(b).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

/// Entropy of the 64-bin amplitude histogram over `mean ± 4 sd`.
pub fn entropy_temporal(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("empty signal".into()));
    }
    let sd = std_dev(x);
    if sd == 0.0 {
        return Ok(0.0);
    }
    let m = mean(x);
    let bins = ENTROPY_BINS.min(x.len());
    Ok(shannon(&estimate_pdf(x, bins, m - 4.0 * sd, m + 4.0 * sd)?))
}

/// Entropy of the PSD normalised to unit mass.
pub fn entropy_spectral(psd: &PsdEstimate) -> Result<f64> {
    let total: f64 = psd.power.iter().sum();
    if psd.power.is_empty() || total <= 0.0 {
        return Err(Error::Degenerate("PSD has zero total power".into()));
    }
    let p: Vec<f64> = psd.power.iter().map(|v| v / total).collect();
    Ok(shannon(&p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::SeededRng;
    use std::f64::consts::PI;

    #[test]
    fn mobility_degenerate_and_scale_invariant() {
        assert_eq!(hjorth_mobility(&[2.0; 10]).unwrap(), 0.0);
        assert!(hjorth_mobility(&[1.0, 2.0]).is_err());
        let x: Vec<f64> = (0..100).map(|i| (i as f64 * 0.7).sin() + 0.1 * i as f64).collect();
        let m = hjorth_mobility(&x).unwrap();
        for c in [-3.0, 0.25, 8.0] {
            let y: Vec<f64> = x.iter().map(|v| v * c).collect();
            let my = hjorth_mobility(&y).unwrap();
            assert!((my - m).abs() <= 1e-12 * m, "{my} vs {m}");
        }
    }

    #[test]
    fn mobility_of_white_noise_is_sqrt_two() {
        let mut rng = SeededRng::new(5);
        let x: Vec<f64> = (0..10_000).map(|_| rng.normal()).collect();
        let m = hjorth_mobility(&x).unwrap();
        assert!((m - 2f64.sqrt()).abs() / 2f64.sqrt() < 0.05, "{m}");
    }

    #[test]
    fn mobility_of_sinusoid_closed_form() {
        let fs = 100.0;
        for f in [3.0, 10.0, 21.0] {
            let x: Vec<f64> = (0..5000).map(|i| (2.0 * PI * f * i as f64 / fs).sin()).collect();
            let expect = 2.0 * (PI * f / fs).sin();
            let m = hjorth_mobility(&x).unwrap();
            assert!((m - expect).abs() / expect < 0.02, "{f}: {m} vs {expect}");
        }
    }

    #[test]
    fn entropy_edge_cases() {
        assert_eq!(entropy_temporal(&[1.5; 100]).unwrap(), 0.0);
        assert!((shannon(&[0.25; 4]) - 4f64.ln()).abs() < 1e-15);
        let flat = PsdEstimate {
            freqs: (0..8).map(|k| k as f64).collect(),
            power: vec![2.0; 8],
            resolution: 1.0,
        };
        assert!((entropy_spectral(&flat).unwrap() - 8f64.ln()).abs() < 1e-12);
        let mut spike = flat.clone();
        spike.power = vec![0.0; 8];
        spike.power[3] = 5.0;
        assert_eq!(entropy_spectral(&spike).unwrap(), 0.0);
        spike.power[3] = 0.0;
        assert!(entropy_spectral(&spike).is_err());
    }

    #[test]
    fn temporal_entropy_matches_direct_histogram() {
        let mut rng = SeededRng::new(8);
        let x: Vec<f64> = (0..5000).map(|_| rng.normal() * 2.0 + 1.0).collect();
        let (m, sd) = (mean(&x), std_dev(&x));
        let (lo, width) = (m - 4.0 * sd, 8.0 * sd / 64.0);
        let mut counts = [0usize; 64];
        for v in &x {
            let k = (((v - lo) / width).floor().max(0.0) as usize).min(63);
            counts[k] += 1;
        }
        let direct: f64 = counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / x.len() as f64;
                -p * p.ln()
            })
            .sum();
        assert_eq!(entropy_temporal(&x).unwrap(), direct);
    }

    #[test]
    fn pdf_normalisation_and_degenerate_range() {
        let x: Vec<f64> = (0..200).map(|i| (i as f64).sqrt()).collect();
        let (lo, hi) = shared_range(&x, &x);
        let p = estimate_pdf(&x, 64, lo, hi).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p, estimate_pdf(&x, 64, lo, hi).unwrap());
        let d = estimate_pdf(&[3.0; 70], 64, 3.0, 3.0).unwrap();
        assert_eq!(d[0], 1.0);
        assert!(estimate_pdf(&[0.0; 10], 64, 0.0, 1.0).is_err());
    }
}
