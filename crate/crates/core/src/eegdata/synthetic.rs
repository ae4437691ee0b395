//! Seeded synthetic EEG: band sinusoids, pink noise and spike artifacts.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::recording::Recording;
use crate::autodiff::SeededRng;
use crate::error::{Error, Result};

/// Centre frequencies (Hz) of the generated delta, theta, alpha and beta tones.
pub const BAND_TONES_HZ: [f64; 4] = [2.0, 6.0, 10.0, 20.0];

/// Channels of the desk-scale benchmark; `Cz` is the reconstruction target.
pub const BENCHMARK_CHANNELS: [&str; 4] = ["FCz", "C1", "Cz", "C2"];
pub const BENCHMARK_TARGET: &str = "Cz";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub channels: Vec<String>,
    /// Tone amplitudes (µV) for delta, theta, alpha, beta.
    pub band_amplitudes: [f64; 4],
    /// RMS of the 1/f noise (µV).
    pub pink_amplitude: f64,
    /// Share of the pink-noise variance common to all channels, in `[0, 1]`.
    pub noise_coupling: f64,
    /// Spread of per-channel tone phases around a shared per-band phase,
    /// as a fraction of a full cycle. 1 gives independent phases.
    pub phase_jitter: f64,
    /// Per-sample standard deviation (radians) of a random walk added to
    /// each band's phase, shared by all channels. 0 keeps pure tones; a
    /// positive value turns each tone into a narrow band.
    pub phase_drift: f64,
    pub spike_rate_per_min: f64,
    /// Spike peak as a multiple of the channel's artifact-free RMS.
    pub spike_multiplier: f64,
    pub duration_s: f64,
    pub fs: f64,
    pub seed: u64,
    pub subject_id: String,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            channels: BENCHMARK_CHANNELS.iter().map(|s| s.to_string()).collect(),
            band_amplitudes: [10.0, 6.0, 12.0, 3.0],
            pink_amplitude: 4.0,
            noise_coupling: 0.5,
            phase_jitter: 1.0,
            phase_drift: 0.0,
            spike_rate_per_min: 6.0,
            spike_multiplier: 8.0,
            duration_s: 60.0,
            fs: 100.0,
            seed: 0,
            subject_id: "synthetic".into(),
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let amps = self.band_amplitudes.iter().chain([
            &self.pink_amplitude,
            &self.spike_rate_per_min,
            &self.spike_multiplier,
        ]);
        for v in amps {
            if !(*v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("synthetic amplitudes and rates must be >= 0, got {v}")));
            }
        }
        if !(self.duration_s > 0.0) || !(self.fs > 0.0) {
            return Err(Error::Config("duration and sampling rate must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.noise_coupling) || !(0.0..=1.0).contains(&self.phase_jitter) {
            return Err(Error::Config("noise_coupling and phase_jitter must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.phase_drift) {
            return Err(Error::Config("phase_drift must lie in [0, 1] rad per sample".into()));
        }
        if self.channels.is_empty() {
            return Err(Error::Config("no channels requested".into()));
        }
        if BAND_TONES_HZ[3] >= self.fs / 2.0 {
            return Err(Error::Config(format!("fs {} Hz cannot represent a 20 Hz tone", self.fs)));
        }
        Ok(())
    }
}

/// What went into a synthetic recording.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTruth {
    pub band_freqs: [f64; 4],
    pub band_amplitudes: [f64; 4],
    /// `phases[c][band]`, radians.
    pub phases: Vec<[f64; 4]>,
    /// Sample index of each spike peak.
    pub spike_peaks: Vec<usize>,
    /// Artifact-free signal per channel.
    pub clean: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticRecording {
    pub recording: Recording,
    pub truth: SyntheticTruth,
}

/// Unit-RMS pink noise (Kellet's refined 1/f filter on white noise).
fn pink_noise(n: usize, rng: &mut SeededRng) -> Vec<f64> {
    let mut b = [0.0f64; 7];
    let mut out: Vec<f64> = (0..n)
        .map(|_| {
            let w = rng.normal();
            b[0] = 0.99886 * b[0] + w * 0.0555179;
            b[1] = 0.99332 * b[1] + w * 0.0750759;
            b[2] = 0.96900 * b[2] + w * 0.1538520;
            b[3] = 0.86650 * b[3] + w * 0.3104856;
            b[4] = 0.55000 * b[4] + w * 0.5329522;
            b[5] = -0.7616 * b[5] - w * 0.0168980;
            let y = b.iter().sum::<f64>() + w * 0.5362;
            b[6] = w * 0.115926;
            y
        })
        .collect();
    let mean = out.iter().sum::<f64>() / n as f64;
    let rms = (out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    if rms > 0.0 {
        out.iter_mut().for_each(|v| *v = (*v - mean) / rms);
    }
    out
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticRecording> {
    spec.validate()?;
    let n = (spec.duration_s * spec.fs).round().max(1.0) as usize;
    let c = spec.channels.len();
    let root = SeededRng::new(spec.seed);
    let mut phase_rng = root.fork(1);
    let mut noise_rng = root.fork(2);
    let mut spike_rng = root.fork(3);

    let common: Vec<f64> = (0..4).map(|_| phase_rng.uniform_range(-PI, PI)).collect();
    let phases: Vec<[f64; 4]> = (0..c)
        .map(|_| {
            let mut p = [0.0; 4];
            for (band, ph) in p.iter_mut().enumerate() {
                *ph = common[band] + spec.phase_jitter * phase_rng.uniform_range(-PI, PI);
            }
            p
        })
        .collect();

    let mut drift_rng = root.fork(4);
    let drift: Vec<[f64; 4]> = if spec.phase_drift > 0.0 {
        let mut acc = [0.0; 4];
        (0..n)
            .map(|_| {
                let now = acc;
                acc.iter_mut().for_each(|a| *a += spec.phase_drift * drift_rng.normal());
                now
            })
            .collect()
    } else {
        vec![[0.0; 4]; n]
    };

    let shared_noise = pink_noise(n, &mut noise_rng);
    let (ws, wo) = (spec.noise_coupling.sqrt(), (1.0 - spec.noise_coupling).sqrt());
    let clean: Vec<Vec<f64>> = phases
        .iter()
        .map(|ph| {
            let own = pink_noise(n, &mut noise_rng);
            (0..n)
                .map(|i| {
                    let t = i as f64 / spec.fs;
                    let tones: f64 = (0..4)
                        .map(|b| {
                            spec.band_amplitudes[b] * (2.0 * PI * BAND_TONES_HZ[b] * t + ph[b] + drift[i][b]).sin()
                        })
                        .sum();
                    tones + spec.pink_amplitude * (ws * shared_noise[i] + wo * own[i])
                })
                .collect()
        })
        .collect();

    let n_spikes = (spec.spike_rate_per_min * spec.duration_s / 60.0).round() as usize;
    let margin = (0.5 * spec.fs) as usize;
    let mut spike_peaks: Vec<usize> = if n > 2 * margin {
        (0..n_spikes).map(|_| margin + spike_rng.below(n - 2 * margin)).collect()
    } else {
        Vec::new()
    };
    spike_peaks.sort_unstable();

    // Gaussian pulse, sigma 20 ms (roughly 100 ms wide at the base).
    let sigma = 0.02 * spec.fs;
    let half = (4.0 * sigma).ceil() as isize;
    let mut data = clean.clone();
    for &peak in &spike_peaks {
        let sign = if spike_rng.uniform() < 0.5 { -1.0 } else { 1.0 };
        for (row, base) in data.iter_mut().zip(&clean) {
            let rms = (base.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
            let amp = sign * spec.spike_multiplier * rms * spike_rng.uniform_range(0.8, 1.0);
            for k in -half..=half {
                let idx = peak as isize + k;
                if idx >= 0 && (idx as usize) < n {
                    row[idx as usize] += amp * (-(k as f64).powi(2) / (2.0 * sigma * sigma)).exp();
                }
            }
        }
    }

    let recording = Recording::new(spec.channels.clone(), spec.fs, data, spec.subject_id.clone())?;
    Ok(SyntheticRecording {
        recording,
        truth: SyntheticTruth {
            band_freqs: BAND_TONES_HZ,
            band_amplitudes: spec.band_amplitudes,
            phases,
            spike_peaks,
            clean,
        },
    })
}

/// Phase random-walk step of the benchmark cohort: about 0.7 Hz of
/// Lorentzian line width at 100 Hz, so window content never repeats.
pub const BENCHMARK_PHASE_DRIFT: f64 = 0.15;

/// Benchmark cohort: `n_subjects` recordings over [`BENCHMARK_CHANNELS`]
/// with strongly coupled channels, drifting band phases and subject-specific band amplitudes
/// (each scaled by a factor in `[0.8, 1.2]`).
pub fn benchmark_cohort(n_subjects: usize, duration_s: f64, seed: u64) -> Result<Vec<SyntheticRecording>> {
    let root = SeededRng::new(seed);
    (0..n_subjects)
        .map(|s| {
            let mut rng = root.fork(100 + s as u64);
            let base = SyntheticSpec::default();
            let mut amps = base.band_amplitudes;
            amps.iter_mut().for_each(|a| *a *= rng.uniform_range(0.8, 1.2));
            generate_synthetic(&SyntheticSpec {
                band_amplitudes: amps,
                phase_jitter: 0.15,
                phase_drift: BENCHMARK_PHASE_DRIFT,
                noise_coupling: 0.8,
                duration_s,
                seed: rng.next_seed(),
                subject_id: format!("sub{:02}", s + 1),
                ..base
            })
        })
        .collect()
}
