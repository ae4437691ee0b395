//! Scalar comparison metrics between an original and a reconstruction.

use crate::dsp::{PsdEstimate, Spectrogram};
use crate::error::{Error, Result};

/// Frequency range used for PSD correlation.
pub const PSD_BAND: (f64, f64) = (0.5, 40.0);

/// Symmetric absolute percentage difference on the 0-200 scale; 0 when both
/// are zero.
pub fn smape(a: f64, b: f64) -> f64 {
    let d = a.abs() + b.abs();
    if d == 0.0 {
        0.0
    } else {
        200.0 * (a - b).abs() / d
    }
}

fn check_distribution(p: &[f64], name: &str) -> Result<()> {
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 || p.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidArgument(format!("{name} is not a probability vector (sum {s})")));
    }
    Ok(())
}

/// Jensen-Shannon divergence in nats, `0 log 0 = 0`.
pub fn js_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::shape("js_divergence", &[p.len()], &[q.len()]));
    }
    check_distribution(p, "p")?;
    check_distribution(q, "q")?;
    let kl_half = |a: f64, m: f64| if a > 0.0 { a * (a / m).ln() } else { 0.0 };
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        d += 0.5 * (kl_half(a, m) + kl_half(b, m));
    }
    Ok(d.max(0.0))
}

/// Pearson correlation; errors when either vector has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::shape("pearson", &[a.len()], &[b.len()]));
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Degenerate("zero variance in correlation".into()));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of two PSDs over 0.5-40 Hz.
pub fn psd_pearson(x: &PsdEstimate, y: &PsdEstimate) -> Result<f64> {
    if x.freqs != y.freqs {
        return Err(Error::InvalidArgument("PSDs are on different frequency grids".into()));
    }
    let keep = |f: &f64| (PSD_BAND.0..=PSD_BAND.1).contains(f);
    let pick = |p: &PsdEstimate| -> Vec<f64> {
        p.freqs.iter().zip(&p.power).filter(|(f, _)| keep(f)).map(|(_, v)| *v).collect()
    };
    pearson(&pick(x), &pick(y))
}

/// Rows are observations (frames), columns variables (bins); columns are
/// centred. Returns the `rows x rows` Gram matrix.
fn centred_gram(s: &[Vec<f64>]) -> Vec<f64> {
    let n = s.len();
    let p = s.first().map_or(0, Vec::len);
    let mut c = s.to_vec();
    for j in 0..p {
        let m = s.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        c.iter_mut().for_each(|r| r[j] -= m);
    }
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for k in i..n {
            let v: f64 = c[i].iter().zip(&c[k]).map(|(a, b)| a * b).sum();
            g[i * n + k] = v;
            g[k * n + i] = v;
        }
    }
    g
}

/// RV coefficient of two equally shaped matrices after column centring.
pub fn rv_coefficient(s1: &[Vec<f64>], s2: &[Vec<f64>]) -> Result<f64> {
    let shape = |s: &[Vec<f64>]| (s.len(), s.first().map_or(0, Vec::len));
    if shape(s1) != shape(s2) || s1.iter().chain(s2).any(|r| r.len() != shape(s1).1) {
        return Err(Error::shape("rv_coefficient", &[shape(s1).0, shape(s1).1], &[shape(s2).0, shape(s2).1]));
    }
    let (a, b) = (centred_gram(s1), centred_gram(s2));
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| u * v).sum::<f64>();
    let den = (dot(&a, &a) * dot(&b, &b)).sqrt();
    if !(den > 0.0) {
        return Err(Error::Degenerate("zero-norm matrix in RV coefficient".into()));
    }
    Ok((dot(&a, &b) / den).clamp(0.0, 1.0))
}

pub fn spectrogram_rv(x: &Spectrogram, y: &Spectrogram) -> Result<f64> {
    rv_coefficient(&x.magnitude, &y.magnitude)
}

/// Mean squared difference of two spectrogram magnitudes.
pub fn spectrogram_mse(x: &Spectrogram, y: &Spectrogram) -> Result<f64> {
    if x.frames() != y.frames() || x.bins() != y.bins() {
        return Err(Error::shape("spectrogram_mse", &[x.frames(), x.bins()], &[y.frames(), y.bins()]));
    }
    let n = (x.frames() * x.bins()) as f64;
    Ok(x.magnitude
        .iter()
        .flatten()
        .zip(y.magnitude.iter().flatten())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}
