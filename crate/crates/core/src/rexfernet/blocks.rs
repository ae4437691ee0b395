//! Non-parametric pieces of the pipeline: neighbourhood selection, latent
//! sampling, frame unfolding, outlier clipping and reference rescaling.
//! Each comes with the backward rule the model needs.

use serde::{Deserialize, Serialize};

use crate::autodiff::{Mode, SeededRng};
use crate::eegdata::NeighborMap;
use crate::error::{Error, Result};

/// Target statistics used to rescale a reconstruction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceStats {
    pub mean: f64,
    pub sd: f64,
    /// Index of the window the statistics were taken from.
    pub source: usize,
}

impl ReferenceStats {
    pub fn new(mean: f64, sd: f64, source: usize) -> Result<Self> {
        if !(sd > 0.0) || !sd.is_finite() || !mean.is_finite() {
            return Err(Error::Degenerate(format!("reference sd must be positive, got {sd}")));
        }
        Ok(Self { mean, sd, source })
    }

    /// Population mean and standard deviation of `x`.
    pub fn of(x: &[f64], source: usize) -> Result<Self> {
        let (m, s) = moments(x);
        Self::new(m, s, source)
    }
}

pub(crate) fn moments(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
    (m, v.sqrt())
}

/// Neighbour stack of one window, laid out `(time, neighbour)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborStack {
    pub neighbors: Vec<usize>,
    /// Positions (into `neighbors`) zeroed by dropout.
    pub dropped: Vec<usize>,
    pub data: Vec<f64>,
}

/// How many neighbours to drop: with at most three, one is dropped with
/// probability 1/2 (never the last one standing); with more, one or two
/// uniformly.
pub fn dropout_count(k: usize, rng: &mut SeededRng) -> usize {
    if k <= 1 {
        0
    } else if k <= 3 {
        usize::from(rng.uniform() < 0.5)
    } else {
        1 + rng.below(2)
    }
}

/// Stacks the target's neighbours (never the target itself). `channels`
/// must follow the neighbour map's channel order. In train mode with
/// `dropout`, some neighbours are zeroed and the survivors scaled by
/// `k / (k - dropped)`. With `standardize`, each neighbour is z-scored over
/// the window (a flat neighbour becomes zeros).
pub fn select_neighborhood_input(
    channels: &[&[f64]],
    target: usize,
    nmap: &NeighborMap,
    mode: Mode,
    dropout: bool,
    standardize: bool,
    rng: &mut SeededRng,
) -> Result<NeighborStack> {
    if channels.len() != nmap.len() {
        return Err(Error::shape("select_neighborhood_input", &[nmap.len()], &[channels.len()]));
    }
    let neighbors = nmap.of(target).to_vec();
    if neighbors.is_empty() {
        return Err(Error::NoNeighbours(nmap.labels[target].clone()));
    }
    let w = channels[target].len();
    let k = neighbors.len();
    let mut dropped = Vec::new();
    if mode == Mode::Train && dropout {
        let mut order: Vec<usize> = (0..k).collect();
        rng.shuffle(&mut order);
        dropped = order[..dropout_count(k, rng)].to_vec();
        dropped.sort_unstable();
    }
    let gain = k as f64 / (k - dropped.len()) as f64;
    let mut data = vec![0.0; w * k];
    for (j, &ch) in neighbors.iter().enumerate() {
        if dropped.contains(&j) {
            continue;
        }
        let x = channels[ch];
        if x.len() != w {
            return Err(Error::shape("select_neighborhood_input", &[w], &[x.len()]));
        }
        let (m, s) = if standardize { moments(x) } else { (0.0, 1.0) };
        let scale = if s > 0.0 { gain / s } else { 0.0 };
        for (t, v) in x.iter().enumerate() {
            data[t * k + j] = (v - m) * scale;
        }
    }
    Ok(NeighborStack { neighbors, dropped, data })
}

/// `z = mu + exp(lv / 2) * eps` in train mode, `z = mu` in eval mode.
/// Returns `z` and the noise used (empty in eval mode).
pub fn sample_latent(mu: &[f64], log_var: &[f64], mode: Mode, rng: &mut SeededRng) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(mu.len(), log_var.len());
    match mode {
        Mode::Eval => (mu.to_vec(), Vec::new()),
        Mode::Train => {
            let eps: Vec<f64> = (0..mu.len()).map(|_| rng.normal()).collect();
            let z = mu
                .iter()
                .zip(log_var)
                .zip(&eps)
                .map(|((m, lv), e)| m + (0.5 * lv).exp() * e)
                .collect();
            (z, eps)
        }
    }
}

/// Gradients of `mu` and `log_var` from the gradient of `z`.
pub fn sample_latent_backward(dz: &[f64], log_var: &[f64], eps: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d_mu = dz.to_vec();
    let d_lv = if eps.is_empty() {
        vec![0.0; dz.len()]
    } else {
        dz.iter()
            .zip(log_var)
            .zip(eps)
            .map(|((g, lv), e)| g * 0.5 * (0.5 * lv).exp() * e)
            .collect()
    };
    (d_mu, d_lv)
}

/// Sliding frames over a `(batch, steps, channels)` buffer: frame `f` is the
/// flattened `steps f*stride .. f*stride + win`.
pub fn unfold_frames(x: &[f64], batch: usize, steps: usize, channels: usize, win: usize, stride: usize) -> Vec<f64> {
    let frames = (steps - win) / stride + 1;
    let flen = win * channels;
    let mut out = Vec::with_capacity(batch * frames * flen);
    for b in 0..batch {
        let base = b * steps * channels;
        for f in 0..frames {
            let start = base + f * stride * channels;
            out.extend_from_slice(&x[start..start + flen]);
        }
    }
    out
}

/// Adjoint of [`unfold_frames`]: sums frame gradients back onto the steps.
pub fn unfold_frames_backward(d: &[f64], batch: usize, steps: usize, channels: usize, win: usize, stride: usize) -> Vec<f64> {
    let frames = (steps - win) / stride + 1;
    let flen = win * channels;
    let mut out = vec![0.0; batch * steps * channels];
    for b in 0..batch {
        for f in 0..frames {
            let src = &d[(b * frames + f) * flen..(b * frames + f + 1) * flen];
            let start = b * steps * channels + f * stride * channels;
            for (o, g) in out[start..start + flen].iter_mut().zip(src) {
                *o += g;
            }
        }
    }
    out
}

/// Number of frames covering each step.
pub fn overlap_counts(steps: usize, win: usize, stride: usize) -> Vec<f64> {
    let frames = (steps - win) / stride + 1;
    let mut c = vec![0.0; steps];
    for f in 0..frames {
        for v in &mut c[f * stride..f * stride + win] {
            *v += 1.0;
        }
    }
    c
}

/// Overlap-add of frames onto the step timeline, divided by the number of
/// frames covering each step.
pub fn fold_frames(frames: &[f64], batch: usize, steps: usize, channels: usize, win: usize, stride: usize) -> Vec<f64> {
    let mut out = unfold_frames_backward(frames, batch, steps, channels, win, stride);
    let counts = overlap_counts(steps, win, stride);
    for (i, v) in out.iter_mut().enumerate() {
        let c = counts[(i / channels) % steps];
        if c > 0.0 {
            *v /= c;
        }
    }
    out
}

pub fn fold_frames_backward(d: &[f64], batch: usize, steps: usize, channels: usize, win: usize, stride: usize) -> Vec<f64> {
    let counts = overlap_counts(steps, win, stride);
    let scaled: Vec<f64> = d
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let c = counts[(i / channels) % steps];
            if c > 0.0 {
                g / c
            } else {
                0.0
            }
        })
        .collect();
    unfold_frames(&scaled, batch, steps, channels, win, stride)
}

/// Cache for [`remove_outlier_backward`].
#[derive(Clone, Debug, PartialEq)]
pub struct OutlierCache {
    pub mean: f64,
    pub sd: f64,
    /// +1 clipped high, -1 clipped low, 0 untouched.
    pub clipped: Vec<i8>,
}

/// Clips samples beyond `mean +- z * sd` (statistics of `x` itself).
pub fn remove_outlier(x: &[f64], z: f64) -> (Vec<f64>, OutlierCache) {
    let (mean, sd) = moments(x);
    let (lo, hi) = (mean - z * sd, mean + z * sd);
    let mut clipped = vec![0i8; x.len()];
    let y = if sd > 0.0 {
        x.iter()
            .zip(clipped.iter_mut())
            .map(|(&v, c)| {
                if v > hi {
                    *c = 1;
                    hi
                } else if v < lo {
                    *c = -1;
                    lo
                } else {
                    v
                }
            })
            .collect()
    } else {
        x.to_vec()
    };
    (y, OutlierCache { mean, sd, clipped })
}

/// Exact gradient of [`remove_outlier`], including the dependence of the
/// clip bounds on the window mean and sd.
pub fn remove_outlier_backward(dy: &[f64], x: &[f64], z: f64, cache: &OutlierCache) -> Vec<f64> {
    let n = x.len() as f64;
    let (mut up, mut down) = (0.0, 0.0);
    for (g, c) in dy.iter().zip(&cache.clipped) {
        match c {
            1 => up += g,
            -1 => down += g,
            _ => {}
        }
    }
    let shared = (up + down) / n;
    let spread = if cache.sd > 0.0 { z * (up - down) / (n * cache.sd) } else { 0.0 };
    dy.iter()
        .zip(&cache.clipped)
        .zip(x)
        .map(|((g, c), v)| if *c == 0 { *g } else { 0.0 } + shared + spread * (v - cache.mean))
        .collect()
}

/// Cache for [`scale_output_backward`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleCache {
    pub normalized: Vec<f64>,
    pub sd: f64,
    /// `sd_ref * gain`.
    pub amplitude: f64,
    pub degenerate: bool,
}

/// `((x - mean) / sd) * ref.sd * g + ref.mean` with `g ~ U[1 - jitter, 1 + jitter]`
/// in train mode and `g = 1` in eval mode. A flat `x` yields the constant
/// `ref.mean` and sets `degenerate`.
pub fn scale_output(x: &[f64], reference: &ReferenceStats, mode: Mode, jitter: f64, rng: &mut SeededRng) -> (Vec<f64>, ScaleCache) {
    let gain = match mode {
        Mode::Train => rng.uniform_range(1.0 - jitter, 1.0 + jitter),
        Mode::Eval => 1.0,
    };
    let (mean, sd) = moments(x);
    let amplitude = reference.sd * gain;
    if !(sd > 0.0) {
        let cache = ScaleCache { normalized: vec![0.0; x.len()], sd, amplitude, degenerate: true };
        return (vec![reference.mean; x.len()], cache);
    }
    let normalized: Vec<f64> = x.iter().map(|v| (v - mean) / sd).collect();
    let y = normalized.iter().map(|u| u * amplitude + reference.mean).collect();
    (y, ScaleCache { normalized, sd, amplitude, degenerate: false })
}

pub fn scale_output_backward(dy: &[f64], cache: &ScaleCache) -> Vec<f64> {
    if cache.degenerate {
        return vec![0.0; dy.len()];
    }
    let n = dy.len() as f64;
    let mean_g = dy.iter().sum::<f64>() / n;
    let mean_gu = dy.iter().zip(&cache.normalized).map(|(g, u)| g * u).sum::<f64>() / n;
    let k = cache.amplitude / cache.sd;
    dy.iter()
        .zip(&cache.normalized)
        .map(|(g, u)| k * (g - mean_g - u * mean_gu))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eegdata::{ElectrodePosition, Montage};

    fn numeric(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], proj: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..x.len())
            .map(|i| {
                let mut p = x.to_vec();
                let mut m = x.to_vec();
                p[i] += h;
                m[i] -= h;
                let fp: f64 = f(&p).iter().zip(proj).map(|(a, b)| a * b).sum();
                let fm: f64 = f(&m).iter().zip(proj).map(|(a, b)| a * b).sum();
                (fp - fm) / (2.0 * h)
            })
            .collect()
    }

    fn randn(n: usize, seed: u64) -> Vec<f64> {
        let mut r = SeededRng::new(seed);
        (0..n).map(|_| r.normal()).collect()
    }

    fn star(k: usize) -> NeighborMap {
        let mut pos = vec![ElectrodePosition::new("T", 0.0, 0.0)];
        for j in 0..k {
            let a = j as f64 * std::f64::consts::TAU / k as f64;
            pos.push(ElectrodePosition::new(format!("N{j}"), 0.04 * a.cos(), 0.04 * a.sin()));
        }
        NeighborMap::from_montage(&Montage::new(pos).unwrap(), 0.041)
    }

    #[test]
    fn eval_mode_stacks_all_neighbours() {
        let nmap = star(3);
        let data: Vec<Vec<f64>> = (0..4).map(|c| vec![c as f64; 256]).collect();
        let refs: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        let s = select_neighborhood_input(&refs, 0, &nmap, Mode::Eval, true, false, &mut SeededRng::new(1)).unwrap();
        assert_eq!(s.data.len(), 256 * 3);
        assert!(s.dropped.is_empty());
        assert!(!s.neighbors.contains(&0));
    }

    #[test]
    fn dropout_bounds() {
        let mut rng = SeededRng::new(2);
        for _ in 0..10_000 {
            let d = dropout_count(5, &mut rng);
            assert!(d == 1 || d == 2);
            assert!(dropout_count(3, &mut rng) <= 1);
        }
        assert_eq!(dropout_count(1, &mut rng), 0);
    }

    #[test]
    fn latent_sampling() {
        let mu = vec![0.5, -1.0];
        let lv = vec![0.0, -2.0];
        let (z, eps) = sample_latent(&mu, &lv, Mode::Eval, &mut SeededRng::new(1));
        assert_eq!((z, eps.len()), (mu.clone(), 0));
        let (d_mu, _) = sample_latent_backward(&[1.0, 2.0], &lv, &[0.3, 0.1]);
        assert_eq!(d_mu, vec![1.0, 2.0]);
    }

    #[test]
    fn fold_inverts_unfold_for_consistent_frames() {
        let (b, t, c, w) = (2, 10, 3, 4);
        let x = randn(b * t * c, 3);
        let frames = unfold_frames(&x, b, t, c, w, 1);
        assert_eq!(frames.len(), b * 7 * w * c);
        let back = fold_frames(&frames, b, t, c, w, 1);
        for (a, e) in back.iter().zip(&x) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn outlier_clipping() {
        let mut x = randn(256, 4);
        let (y, _) = remove_outlier(&x, 3.5);
        let inside = x.iter().all(|v| v.abs() < 3.0);
        if inside {
            assert_eq!(y, x);
        }
        let (m, s) = moments(&x);
        x[100] = m + 12.0 * s;
        let (y, c) = remove_outlier(&x, 3.5);
        assert!(y.iter().all(|v| ((v - c.mean) / c.sd).abs() <= 3.5 + 1e-12));
        let (yy, _) = remove_outlier(&y, 3.5);
        // second pass uses the statistics of the clipped window
        let (m2, s2) = moments(&y);
        assert!(yy.iter().all(|v| ((v - m2) / s2).abs() <= 3.5 + 1e-12));
    }

    #[test]
    fn outlier_gradient() {
        let mut x = randn(40, 5);
        x[3] = 9.0;
        x[17] = -8.0;
        let proj = randn(40, 6);
        let (_, cache) = remove_outlier(&x, 2.0);
        assert!(cache.clipped.iter().any(|c| *c != 0));
        let ana = remove_outlier_backward(&proj, &x, 2.0, &cache);
        let num = numeric(|v| remove_outlier(v, 2.0).0, &x, &proj);
        for (a, n) in ana.iter().zip(&num) {
            assert!((a - n).abs() < 1e-6, "{a} vs {n}");
        }
    }

    #[test]
    fn scale_output_moments_and_gradient() {
        let x = randn(256, 7);
        let r = ReferenceStats::new(12.0, 4.0, 0).unwrap();
        let (y, _) = scale_output(&x, &r, Mode::Eval, 0.1, &mut SeededRng::new(1));
        let (m, s) = moments(&y);
        assert!((m - 12.0).abs() < 1e-9 && (s - 4.0).abs() < 1e-9);
        let proj = randn(256, 8);
        let (_, cache) = scale_output(&x, &r, Mode::Eval, 0.1, &mut SeededRng::new(1));
        let ana = scale_output_backward(&proj, &cache);
        let num = numeric(|v| scale_output(v, &r, Mode::Eval, 0.1, &mut SeededRng::new(1)).0, &x, &proj);
        for (a, n) in ana.iter().zip(&num) {
            assert!((a - n).abs() < 1e-6);
        }
        let (flat, c) = scale_output(&[3.0; 8], &r, Mode::Eval, 0.1, &mut SeededRng::new(1));
        assert!(c.degenerate && flat.iter().all(|v| *v == 12.0));
    }
}
