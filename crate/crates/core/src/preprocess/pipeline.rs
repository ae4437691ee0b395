//! Filtering, segmentation, recentring, stratification and reference
//! tracking.

use serde::{Deserialize, Serialize};

use super::windows::{WindowLabel, WindowOrigin, WindowSet};
use crate::autodiff::{Mode, SeededRng};
use crate::dsp::{design_butterworth_bandpass, zero_phase_filter, FilterSpec};
use crate::eegdata::Recording;
use crate::error::{Error, Result};
use crate::rexfernet::ReferenceStats;

pub const WINDOW_S: f64 = 2.56;
pub const STRIDE_S: f64 = 0.1;
pub const CLEAN_Z: f64 = 3.5;

/// Channel-wise zero-phase band-pass filtering.
pub fn preprocess_recording(rec: &Recording, filt: &FilterSpec) -> Result<Recording> {
    let cascade = design_butterworth_bandpass(filt.order, filt.low_hz, filt.high_hz, rec.fs)?;
    let data = rec
        .data
        .iter()
        .map(|x| zero_phase_filter(x, &cascade))
        .collect::<Result<Vec<_>>>()?;
    Recording::new(rec.channels.clone(), rec.fs, data, rec.subject_id.clone())
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt())
}

/// Sliding windows of `round(win_s * fs)` samples every `round(stride_s * fs)`.
/// Labels start out clean; see [`stratify`].
pub fn segment(rec: &Recording, win_s: f64, stride_s: f64) -> Result<WindowSet> {
    let window = (win_s * rec.fs).round() as usize;
    let stride = (stride_s * rec.fs).round() as usize;
    if window == 0 || stride == 0 {
        return Err(Error::Config(format!("window {win_s} s / stride {stride_s} s round to zero samples")));
    }
    let n = rec.n_samples();
    if n < window {
        return Err(Error::SignalTooShort { len: n, min: window - 1 });
    }
    let count = (n - window) / stride + 1;
    let c = rec.n_channels();
    let mut data = Vec::with_capacity(count * c * window);
    let mut origins = Vec::with_capacity(count);
    for b in 0..count {
        let start = b * stride;
        for row in &rec.data {
            data.extend_from_slice(&row[start..start + window]);
        }
        origins.push(WindowOrigin { subject: rec.subject_id.clone(), start });
    }
    let (global_means, global_sds) = rec.data.iter().map(|row| mean_sd(row)).unzip();
    let mut ws = WindowSet {
        channels: rec.channels.clone(),
        fs: rec.fs,
        window,
        stride,
        data,
        origins,
        labels: vec![WindowLabel::Clean; count],
        means: Vec::new(),
        sds: Vec::new(),
        global_means,
        global_sds,
    };
    ws.refresh_stats();
    Ok(ws)
}

/// What the train-mode perturbation jitters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Perturbation {
    /// Scale deviations about the recentred mean by `g ~ U[1-j, 1+j]`.
    #[default]
    Amplitude,
    /// Offset the recentred mean by `(g - 1)` global standard deviations.
    Mean,
}

/// Recentres one window of one channel in place from window mean `wm` to
/// global mean `gm` and applies gain `g` as the chosen perturbation
/// (`g = 1` leaves a pure shift).
pub fn recenter_channel(x: &mut [f64], wm: f64, gm: f64, global_sd: f64, g: f64, kind: Perturbation) {
    let (scale, centre) = match kind {
        Perturbation::Amplitude => (g, gm),
        Perturbation::Mean => (1.0, gm + (g - 1.0) * global_sd),
    };
    for v in x {
        *v = centre + scale * (*v - wm);
    }
}

/// Shifts every window/channel so its mean equals the global channel mean;
/// in train mode also applies the chosen perturbation with half-width
/// `jitter`. Statistics are refreshed afterwards.
pub fn recenter_perturb(ws: &WindowSet, mode: Mode, kind: Perturbation, jitter: f64, rng: &mut SeededRng) -> WindowSet {
    let mut out = ws.clone();
    for b in 0..ws.len() {
        for c in 0..ws.n_channels() {
            let gm = ws.global_means[c];
            let wm = ws.mean(b, c);
            let g = match mode {
                Mode::Train => rng.uniform_range(1.0 - jitter, 1.0 + jitter),
                Mode::Eval => 1.0,
            };
            recenter_channel(out.channel_mut(b, c), wm, gm, ws.global_sds[c], g, kind);
        }
    }
    out.refresh_stats();
    out
}

/// Clean iff every sample of every channel lies within `z` global standard
/// deviations of that channel's global mean.
pub fn stratify_with(ws: &mut WindowSet, z: f64) -> Result<()> {
    if let Some(c) = ws.global_sds.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::Degenerate(format!("channel {} has zero global standard deviation", ws.channels[c])));
    }
    for b in 0..ws.len() {
        let clean = (0..ws.n_channels()).all(|c| {
            let (m, s) = (ws.global_means[c], ws.global_sds[c]);
            ws.channel(b, c).iter().all(|v| (v - m).abs() <= z * s)
        });
        ws.labels[b] = if clean { WindowLabel::Clean } else { WindowLabel::Noisy };
    }
    Ok(())
}

pub fn stratify(ws: &mut WindowSet) -> Result<()> {
    stratify_with(ws, CLEAN_Z)
}

/// Reference statistics of `channel` for every noisy window: those of the
/// most recent preceding clean window. A noisy window without a clean
/// predecessor is a cold-start error.
pub fn track_reference(ws: &WindowSet, channel: usize) -> Result<Vec<(usize, ReferenceStats)>> {
    let mut last: Option<ReferenceStats> = None;
    let mut out = Vec::new();
    for b in 0..ws.len() {
        match ws.labels[b] {
            WindowLabel::Clean => {
                last = Some(ReferenceStats::new(ws.mean(b, channel), ws.sd(b, channel), b)?);
            }
            WindowLabel::Noisy => match last {
                Some(r) => out.push((b, r)),
                None => return Err(Error::ColdStart { window: b }),
            },
        }
    }
    Ok(out)
}

/// Scaling source for every window: its own statistics when clean, the most
/// recent clean window's when noisy, `None` for noisy windows before the
/// first clean one.
pub fn reference_plan(ws: &WindowSet, channel: usize) -> Vec<Option<ReferenceStats>> {
    let mut last = None;
    (0..ws.len())
        .map(|b| match ws.labels[b] {
            WindowLabel::Clean => {
                last = ReferenceStats::new(ws.mean(b, channel), ws.sd(b, channel), b).ok();
                last
            }
            WindowLabel::Noisy => last,
        })
        .collect()
}

/// Preprocessing constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub filter: FilterSpec,
    pub window_s: f64,
    pub stride_s: f64,
    pub clean_z: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self { filter: FilterSpec::default(), window_s: WINDOW_S, stride_s: STRIDE_S, clean_z: CLEAN_Z }
    }
}

/// Full pipeline for one recording: filter, segment, stratify.
pub fn prepare_recording(rec: &Recording, filt: &FilterSpec) -> Result<WindowSet> {
    prepare_recording_with(rec, &PreprocessConfig { filter: *filt, ..Default::default() })
}

pub fn prepare_recording_with(rec: &Recording, cfg: &PreprocessConfig) -> Result<WindowSet> {
    let filtered = preprocess_recording(rec, &cfg.filter)?;
    let mut ws = segment(&filtered, cfg.window_s, cfg.stride_s)?;
    stratify_with(&mut ws, cfg.clean_z)?;
    Ok(ws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rec(data: Vec<Vec<f64>>) -> Recording {
        let labels = (0..data.len()).map(|i| ["Cz", "C1", "C2", "FCz"][i].to_string()).collect();
        Recording::new(labels, 100.0, data, "s").unwrap()
    }

    fn sine(n: usize, f: f64, a: f64, offset: f64) -> Vec<f64> {
        (0..n).map(|i| offset + a * (2.0 * PI * f * i as f64 / 100.0).sin()).collect()
    }

    #[test]
    fn filtering_removes_offset_keeps_alpha() {
        let r = rec(vec![sine(2000, 10.0, 1.0, 50.0)]);
        let f = preprocess_recording(&r, &FilterSpec::default()).unwrap();
        let x = &f.data[0];
        assert_eq!(x.len(), 2000);
        let mid = &x[500..1500];
        assert!((mid.iter().sum::<f64>() / 1000.0).abs() < 0.5);
        let rms = (mid.iter().map(|v| v * v).sum::<f64>() / 1000.0).sqrt();
        // forward-backward pass squares the magnitude response
        let cascade = design_butterworth_bandpass(6, 0.5, 40.0, 100.0).unwrap();
        let want = cascade.magnitude(10.0).powi(2) / 2f64.sqrt();
        assert!((rms - want).abs() < 0.01, "{rms} vs {want}");
    }

    #[test]
    fn window_counts_and_overlap() {
        let ws = segment(&rec(vec![(0..1000).map(|i| i as f64).collect()]), WINDOW_S, STRIDE_S).unwrap();
        assert_eq!((ws.len(), ws.window, ws.stride), (75, 256, 10));
        assert_eq!(ws.channel(3, 0)[10], ws.channel(4, 0)[0]);
        let one = segment(&rec(vec![vec![0.0; 256]]), WINDOW_S, STRIDE_S).unwrap();
        assert_eq!(one.len(), 1);
        assert!(segment(&rec(vec![vec![0.0; 255]]), WINDOW_S, STRIDE_S).is_err());
    }

    #[test]
    fn recentering() {
        let r = rec(vec![sine(1000, 3.0, 2.0, 0.0)]);
        let ws = segment(&r, WINDOW_S, STRIDE_S).unwrap();
        let e = recenter_perturb(&ws, Mode::Eval, Perturbation::Amplitude, 0.1, &mut SeededRng::new(1));
        for b in 0..e.len() {
            assert!((e.mean(b, 0) - ws.global_means[0]).abs() < 1e-9);
        }
        let again = recenter_perturb(&ws, Mode::Eval, Perturbation::Amplitude, 0.1, &mut SeededRng::new(2));
        assert_eq!(e, again);
        let t = recenter_perturb(&ws, Mode::Train, Perturbation::Amplitude, 0.1, &mut SeededRng::new(3));
        for b in 0..t.len() {
            let ratio = t.sd(b, 0) / ws.sd(b, 0);
            assert!((0.9..=1.1).contains(&ratio));
        }
    }

    #[test]
    fn stratification_thresholds() {
        let mut rng = SeededRng::new(4);
        let mut x: Vec<f64> = (0..1000).map(|_| rng.normal().clamp(-2.5, 2.5)).collect();
        let mut ws = segment(&rec(vec![x.clone()]), WINDOW_S, STRIDE_S).unwrap();
        stratify(&mut ws).unwrap();
        assert!(ws.noisy_indices().is_empty());
        let (m, s) = mean_sd(&x);
        x[600] = m + 5.0 * s;
        let mut ws = segment(&rec(vec![x]), WINDOW_S, STRIDE_S).unwrap();
        stratify(&mut ws).unwrap();
        // windows covering sample 600 start within [345, 600]
        let noisy = ws.noisy_indices();
        assert!(!noisy.is_empty());
        assert!(noisy.iter().all(|&b| (345..=600).contains(&ws.origins[b].start)));
        let mut flat = segment(&rec(vec![vec![1.0; 300]]), WINDOW_S, STRIDE_S).unwrap();
        assert!(stratify(&mut flat).is_err());
    }

    fn labelled(labels: &[WindowLabel]) -> WindowSet {
        let mut rng = SeededRng::new(5);
        let n = 256 + 10 * (labels.len() - 1);
        let mut ws = segment(&rec(vec![(0..n).map(|_| rng.normal()).collect()]), WINDOW_S, STRIDE_S).unwrap();
        ws.labels = labels.to_vec();
        ws
    }

    #[test]
    fn reference_is_most_recent_clean() {
        use WindowLabel::*;
        let ws = labelled(&[Clean, Noisy]);
        let r = track_reference(&ws, 0).unwrap();
        assert_eq!(r, vec![(1, ReferenceStats::new(ws.mean(0, 0), ws.sd(0, 0), 0).unwrap())]);
        let ws = labelled(&[Clean, Clean, Noisy, Noisy]);
        let r = track_reference(&ws, 0).unwrap();
        assert!(r.iter().all(|(_, s)| s.source == 1));
        let ws = labelled(&[Noisy, Clean]);
        assert!(matches!(track_reference(&ws, 0), Err(Error::ColdStart { window: 0 })));
        let plan = reference_plan(&ws, 0);
        assert!(plan[0].is_none() && plan[1].unwrap().source == 1);
    }

    #[test]
    fn window_set_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = SeededRng::new(6);
        let r = rec(vec![(0..600).map(|_| rng.normal()).collect(), (0..600).map(|_| rng.normal()).collect()]);
        let mut ws = segment(&r, WINDOW_S, STRIDE_S).unwrap();
        stratify(&mut ws).unwrap();
        ws.save(dir.path()).unwrap();
        assert_eq!(WindowSet::load(dir.path()).unwrap(), ws);
    }
}
