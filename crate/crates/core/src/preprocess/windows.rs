//! Sliding-window sets and their on-disk form.
//!
//! A window set directory holds `windows.bin` (little-endian f64, laid out
//! window-major, then channel, then sample) and `manifest.json` with shapes,
//! labels, per-window statistics and provenance.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowLabel {
    Clean,
    Noisy,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowOrigin {
    pub subject: String,
    /// First sample of the window in the source recording.
    pub start: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowSet {
    pub channels: Vec<String>,
    pub fs: f64,
    pub window: usize,
    pub stride: usize,
    /// `(window, channel, sample)`, row-major.
    pub data: Vec<f64>,
    pub origins: Vec<WindowOrigin>,
    pub labels: Vec<WindowLabel>,
    /// Per window and channel, `(window, channel)` row-major.
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    /// Per channel, over the whole source recording.
    pub global_means: Vec<f64>,
    pub global_sds: Vec<f64>,
}

pub const MANIFEST_FORMAT: &str = "rexfer-windows";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub channels: Vec<String>,
    pub fs: f64,
    pub window: usize,
    pub stride: usize,
    pub n_windows: usize,
    pub n_clean: usize,
    pub n_noisy: usize,
    pub labels: Vec<WindowLabel>,
    pub origins: Vec<WindowOrigin>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub global_means: Vec<f64>,
    pub global_sds: Vec<f64>,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channel_index(&self, label: &str) -> Result<usize> {
        self.channels
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::UnknownChannel(label.to_string()))
    }

    pub fn channel(&self, b: usize, c: usize) -> &[f64] {
        let (cn, w) = (self.n_channels(), self.window);
        &self.data[(b * cn + c) * w..(b * cn + c + 1) * w]
    }

    pub fn channel_mut(&mut self, b: usize, c: usize) -> &mut [f64] {
        let (cn, w) = (self.n_channels(), self.window);
        &mut self.data[(b * cn + c) * w..(b * cn + c + 1) * w]
    }

    /// All channels of window `b`.
    pub fn window_channels(&self, b: usize) -> Vec<&[f64]> {
        (0..self.n_channels()).map(|c| self.channel(b, c)).collect()
    }

    pub fn mean(&self, b: usize, c: usize) -> f64 {
        self.means[b * self.n_channels() + c]
    }

    pub fn sd(&self, b: usize, c: usize) -> f64 {
        self.sds[b * self.n_channels() + c]
    }

    pub fn clean_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&b| self.labels[b] == WindowLabel::Clean).collect()
    }

    pub fn noisy_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&b| self.labels[b] == WindowLabel::Noisy).collect()
    }

    /// Recomputes per-window means and population standard deviations.
    pub fn refresh_stats(&mut self) {
        let (b, c) = (self.len(), self.n_channels());
        let mut means = Vec::with_capacity(b * c);
        let mut sds = Vec::with_capacity(b * c);
        for bi in 0..b {
            for ci in 0..c {
                let (m, s) = crate::rexfernet::ReferenceStats::of(self.channel(bi, ci), bi)
                    .map(|r| (r.mean, r.sd))
                    .unwrap_or_else(|_| {
                        let x = self.channel(bi, ci);
                        (x.iter().sum::<f64>() / x.len() as f64, 0.0)
                    });
                means.push(m);
                sds.push(s);
            }
        }
        self.means = means;
        self.sds = sds;
    }

    pub fn manifest(&self) -> Manifest {
        let n_clean = self.clean_indices().len();
        Manifest {
            format: MANIFEST_FORMAT.into(),
            version: MANIFEST_VERSION,
            channels: self.channels.clone(),
            fs: self.fs,
            window: self.window,
            stride: self.stride,
            n_windows: self.len(),
            n_clean,
            n_noisy: self.len() - n_clean,
            labels: self.labels.clone(),
            origins: self.origins.clone(),
            means: self.means.clone(),
            sds: self.sds.clone(),
            global_means: self.global_means.clone(),
            global_sds: self.global_sds.clone(),
        }
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut w = BufWriter::new(File::create(dir.join("windows.bin"))?);
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&self.manifest())?)?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let m: Manifest = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
        if m.format != MANIFEST_FORMAT || m.version != MANIFEST_VERSION {
            return Err(Error::Config(format!("unsupported window manifest {} v{}", m.format, m.version)));
        }
        let c = m.channels.len();
        let expect = m.n_windows * c * m.window;
        let consistent = m.labels.len() == m.n_windows
            && m.origins.len() == m.n_windows
            && m.means.len() == m.n_windows * c
            && m.sds.len() == m.n_windows * c
            && m.global_means.len() == c
            && m.global_sds.len() == c;
        if !consistent {
            return Err(Error::Config("window manifest arrays disagree with n_windows".into()));
        }
        let mut bytes = Vec::with_capacity(expect * 8);
        BufReader::new(File::open(dir.join("windows.bin"))?).read_to_end(&mut bytes)?;
        if bytes.len() != expect * 8 {
            return Err(Error::Config(format!("windows.bin holds {} bytes, expected {}", bytes.len(), expect * 8)));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        Ok(WindowSet {
            channels: m.channels,
            fs: m.fs,
            window: m.window,
            stride: m.stride,
            data,
            origins: m.origins,
            labels: m.labels,
            means: m.means,
            sds: m.sds,
            global_means: m.global_means,
            global_sds: m.global_sds,
        })
    }
}
