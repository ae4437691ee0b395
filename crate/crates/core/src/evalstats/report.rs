//! Per-window metric reports for one channel and model.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{js_divergence, psd_pearson, smape, spectrogram_mse, spectrogram_rv};
use crate::dsp::{
    entropy_spectral, entropy_temporal, estimate_pdf, hjorth_mobility, relative_band_power, shared_range, std_dev,
    stft_default, welch_default, EEG_BANDS, PDF_BINS,
};
use crate::error::{Error, Result};
use crate::losses::{magnitude_mse, phase_mse, temporal_mse};
use crate::preprocess::{reference_plan, WindowLabel, WindowSet};
use crate::rexfernet::ReferenceStats;

/// Report columns. Clean windows fill the first fourteen, noisy windows
/// `psd_pearson`, `rv` and `smape_sd`.
pub const METRICS: [&str; 15] = [
    "smape_delta",
    "smape_theta",
    "smape_alpha",
    "smape_beta",
    "smape_entropy_temporal",
    "smape_entropy_spectral",
    "smape_mobility",
    "jsd",
    "mse_temporal",
    "mse_magnitude",
    "mse_phase",
    "mse_spectrogram",
    "psd_pearson",
    "rv",
    "smape_sd",
];

pub const NOISY_METRICS: [&str; 3] = ["psd_pearson", "rv", "smape_sd"];

/// Correlation-type metrics, where larger is better.
/// Shortest round-trip text, in exponent form for very small or large
/// magnitudes (p-values reach 1e-300).
pub(crate) fn csv_cell(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| {
        if x != 0.0 && !(1e-4..1e9).contains(&x.abs()) {
            format!("{x:e}")
        } else {
            x.to_string()
        }
    })
}

pub fn higher_is_better(metric: &str) -> bool {
    metric.ends_with("psd_pearson") || metric.ends_with("rv")
}

pub fn metric_index(name: &str) -> Option<usize> {
    METRICS.iter().position(|m| *m == name)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub window: usize,
    pub label: WindowLabel,
    /// Aligned with [`METRICS`]; `None` where not applicable or undefined.
    pub values: Vec<Option<f64>>,
}

impl WindowRow {
    pub fn get(&self, metric: &str) -> Option<f64> {
        metric_index(metric).and_then(|i| self.values[i])
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SectionSummary {
    pub windows: usize,
    /// Mean of each metric over the windows where it is defined.
    pub means: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub channel: String,
    pub variant: Option<String>,
    pub metrics: Vec<String>,
    pub rows: Vec<WindowRow>,
    pub clean: SectionSummary,
    pub noisy: SectionSummary,
}

fn clean_metrics(x: &[f64], y: &[f64], fs: f64) -> Vec<Option<f64>> {
    let mut v = vec![None; METRICS.len()];
    let (px, py) = (welch_default(x, fs).ok(), welch_default(y, fs).ok());
    if let (Some(px), Some(py)) = (&px, &py) {
        if let (Ok(a), Ok(b)) = (relative_band_power(px, &EEG_BANDS), relative_band_power(py, &EEG_BANDS)) {
            for i in 0..4 {
                v[i] = Some(smape(a[i], b[i]));
            }
        }
        if let (Ok(a), Ok(b)) = (entropy_spectral(px), entropy_spectral(py)) {
            v[5] = Some(smape(a, b));
        }
        v[12] = psd_pearson(px, py).ok();
    }
    if let (Ok(a), Ok(b)) = (entropy_temporal(x), entropy_temporal(y)) {
        v[4] = Some(smape(a, b));
    }
    if let (Ok(a), Ok(b)) = (hjorth_mobility(x), hjorth_mobility(y)) {
        v[6] = Some(smape(a, b));
    }
    let (lo, hi) = shared_range(x, y);
    if let (Ok(p), Ok(q)) = (estimate_pdf(x, PDF_BINS, lo, hi), estimate_pdf(y, PDF_BINS, lo, hi)) {
        v[7] = js_divergence(&p, &q).ok();
    }
    v[8] = Some(temporal_mse(x, y));
    v[9] = Some(magnitude_mse(x, y));
    v[10] = Some(phase_mse(x, y));
    if let (Ok(sx), Ok(sy)) = (stft_default(x, fs), stft_default(y, fs)) {
        v[11] = spectrogram_mse(&sx, &sy).ok();
        v[13] = spectrogram_rv(&sx, &sy).ok();
    }
    v
}

fn noisy_metrics(x: &[f64], y: &[f64], reference: &ReferenceStats, fs: f64) -> Vec<Option<f64>> {
    let mut v = vec![None; METRICS.len()];
    if let (Ok(px), Ok(py)) = (welch_default(x, fs), welch_default(y, fs)) {
        v[12] = psd_pearson(&px, &py).ok();
    }
    if let (Ok(sx), Ok(sy)) = (stft_default(x, fs), stft_default(y, fs)) {
        v[13] = spectrogram_rv(&sx, &sy).ok();
    }
    v[14] = Some(smape(std_dev(y), reference.sd));
    v
}

fn summarize(rows: &[WindowRow], label: WindowLabel) -> SectionSummary {
    let chosen: Vec<&WindowRow> = rows.iter().filter(|r| r.label == label).collect();
    let means = (0..METRICS.len())
        .map(|i| {
            let vals: Vec<f64> = chosen.iter().filter_map(|r| r.values[i]).filter(|v| v.is_finite()).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect();
    SectionSummary { windows: chosen.len(), means }
}

/// Scores paired windows. Clean windows get the full suite against the
/// original; noisy windows are compared with the noisy original's PSD and
/// spectrogram and with the reference standard deviation. Windows without a
/// reconstruction (or a noisy one without a reference) keep empty rows.
pub fn evaluate_windows(
    originals: &[&[f64]],
    reconstructions: &[Option<Vec<f64>>],
    labels: &[WindowLabel],
    references: &[Option<ReferenceStats>],
    fs: f64,
    channel: &str,
) -> Result<MetricReport> {
    let n = originals.len();
    if reconstructions.len() != n || labels.len() != n || references.len() != n {
        return Err(Error::InvalidArgument(format!(
            "unpaired inputs: {n} originals, {} reconstructions, {} labels, {} references",
            reconstructions.len(),
            labels.len(),
            references.len()
        )));
    }
    let mut rows = Vec::with_capacity(n);
    for b in 0..n {
        let values = match (&reconstructions[b], labels[b]) {
            (Some(y), _) if y.len() != originals[b].len() => {
                return Err(Error::shape("evaluate_windows", &[originals[b].len()], &[y.len()]));
            }
            (Some(y), WindowLabel::Clean) => clean_metrics(originals[b], y, fs),
            (Some(y), WindowLabel::Noisy) => match &references[b] {
                Some(r) => noisy_metrics(originals[b], y, r, fs),
                None => vec![None; METRICS.len()],
            },
            (None, _) => vec![None; METRICS.len()],
        };
        rows.push(WindowRow { window: b, label: labels[b], values });
    }
    Ok(MetricReport {
        channel: channel.to_string(),
        variant: None,
        metrics: METRICS.iter().map(|m| m.to_string()).collect(),
        clean: summarize(&rows, WindowLabel::Clean),
        noisy: summarize(&rows, WindowLabel::Noisy),
        rows,
    })
}

/// [`evaluate_windows`] for one channel of a window set, with references
/// from the causal tracker.
pub fn evaluate_windowset(ws: &WindowSet, target: usize, reconstructions: &[Option<Vec<f64>>]) -> Result<MetricReport> {
    let originals: Vec<&[f64]> = (0..ws.len()).map(|b| ws.channel(b, target)).collect();
    evaluate_windows(&originals, reconstructions, &ws.labels, &reference_plan(ws, target), ws.fs, &ws.channels[target])
}

impl MetricReport {
    pub fn with_variant(mut self, v: impl Into<String>) -> Self {
        self.variant = Some(v.into());
        self
    }

    pub fn clean_mean(&self, metric: &str) -> Option<f64> {
        metric_index(metric).and_then(|i| self.clean.means[i])
    }

    pub fn noisy_mean(&self, metric: &str) -> Option<f64> {
        metric_index(metric).and_then(|i| self.noisy.means[i])
    }

    /// One row per window; empty cells where a metric does not apply.
    pub fn to_csv(&self) -> String {
        let mut out = format!("window,label,{}\n", self.metrics.join(","));
        for r in &self.rows {
            let label = match r.label {
                WindowLabel::Clean => "clean",
                WindowLabel::Noisy => "noisy",
            };
            let cells: Vec<String> = r.values.iter().map(|v| csv_cell(*v)).collect();
            out.push_str(&format!("{},{label},{}\n", r.window, cells.join(",")));
        }
        out
    }

    /// Writes `metrics.csv` and `report.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("metrics.csv"), self.to_csv())?;
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::SeededRng;

    fn signal(seed: u64) -> Vec<f64> {
        let mut r = SeededRng::new(seed);
        (0..256).map(|i| (i as f64 * 0.6).sin() * 3.0 + r.normal()).collect()
    }

    #[test]
    fn identity_reconstruction_is_perfect() {
        let x = signal(1);
        let r = ReferenceStats::of(&x, 0).unwrap();
        let rep = evaluate_windows(
            &[&x, &x],
            &[Some(x.clone()), Some(x.clone())],
            &[WindowLabel::Clean, WindowLabel::Noisy],
            &[Some(r), Some(r)],
            100.0,
            "Cz",
        )
        .unwrap();
        assert_eq!(rep.rows.len(), 2);
        for (i, m) in METRICS.iter().enumerate() {
            if let Some(v) = rep.rows[0].values[i] {
                let want = if higher_is_better(m) { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12, "{m} = {v}");
            } else {
                assert_eq!(*m, "smape_sd");
            }
        }
        assert_eq!(rep.rows[1].get("smape_sd"), Some(0.0));
        assert!((rep.rows[1].get("rv").unwrap() - 1.0).abs() < 1e-12);
        assert!(rep.rows[1].get("jsd").is_none());
    }

    #[test]
    fn unpaired_is_rejected() {
        let x = signal(2);
        assert!(evaluate_windows(&[&x], &[], &[WindowLabel::Clean], &[None], 100.0, "Cz").is_err());
    }

    #[test]
    fn csv_has_one_row_per_window() {
        let x = signal(3);
        let rep = evaluate_windows(&[&x, &x, &x], &[Some(x.clone()), None, Some(x.clone())], &[WindowLabel::Clean; 3], &[None; 3], 100.0, "Cz").unwrap();
        assert_eq!(rep.to_csv().lines().count(), 4);
        let back: MetricReport = serde_json::from_str(&serde_json::to_string(&rep).unwrap()).unwrap();
        assert_eq!(back, rep);
    }
}
