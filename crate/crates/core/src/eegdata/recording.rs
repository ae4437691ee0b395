//! Multichannel recordings and the EEG CSV format:
//!
//! ```text
//! fs=100
//! Cz,C1,C2
//! 1.25,-0.5,3
//! ...
//! ```
//!
//! Values are written with shortest round-trip formatting, so a write/load
//! cycle is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::montage::Montage;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    pub channels: Vec<String>,
    pub fs: f64,
    /// `data[c][n]`, microvolts.
    pub data: Vec<Vec<f64>>,
    pub subject_id: String,
}

impl Recording {
    pub fn new(
        channels: Vec<String>,
        fs: f64,
        data: Vec<Vec<f64>>,
        subject_id: impl Into<String>,
    ) -> Result<Self> {
        let rec = Self { channels, fs, data, subject_id: subject_id.into() };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.len() != self.data.len() || self.channels.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} data rows",
                self.channels.len(),
                self.data.len()
            )));
        }
        if !(self.fs > 0.0) || !self.fs.is_finite() {
            return Err(Error::InvalidArgument(format!("sampling rate {} must be positive", self.fs)));
        }
        let n = self.data[0].len();
        if n == 0 || self.data.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidArgument("channels must share a non-zero length".into()));
        }
        if self.data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { op: "recording".into() });
        }
        Ok(())
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn n_samples(&self) -> usize {
        self.data[0].len()
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.fs
    }

    pub fn channel_index(&self, label: &str) -> Result<usize> {
        self.channels
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::UnknownChannel(label.to_string()))
    }

    pub fn channel(&self, label: &str) -> Result<&[f64]> {
        Ok(&self.data[self.channel_index(label)?])
    }

    /// Keeps the listed channels, in that order.
    pub fn select<S: AsRef<str>>(&self, labels: &[S]) -> Result<Recording> {
        let data = labels
            .iter()
            .map(|l| self.channel(l.as_ref()).map(<[f64]>::to_vec))
            .collect::<Result<Vec<_>>>()?;
        Recording::new(
            labels.iter().map(|l| l.as_ref().to_string()).collect(),
            self.fs,
            data,
            self.subject_id.clone(),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.n_channels() * self.n_samples() * 12);
        let _ = writeln!(out, "fs={}", self.fs);
        out.push_str(&self.channels.join(","));
        out.push('\n');
        for n in 0..self.n_samples() {
            for (c, row) in self.data.iter().enumerate() {
                if c > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", row[n]);
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Parses an EEG CSV and checks every label against the montage.
pub fn parse_recording(text: &str, path: &Path, montage: &Montage, subject_id: &str) -> Result<Recording> {
    let err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut lines = text.lines().enumerate();
    let fs = match lines.next() {
        Some((_, l)) => l
            .trim()
            .strip_prefix("fs=")
            .and_then(|v| v.trim().parse::<f64>().ok())
            .filter(|fs| *fs > 0.0 && fs.is_finite())
            .ok_or_else(|| err(1, format!("expected `fs=<Hz>` header, found {l:?}")))?,
        None => return Err(err(1, "empty file".into())),
    };
    let channels: Vec<String> = match lines.next() {
        Some((_, l)) if !l.trim().is_empty() => l.split(',').map(|s| s.trim().to_string()).collect(),
        _ => return Err(err(2, "missing channel label row".into())),
    };
    for label in &channels {
        if montage.get(label).is_none() {
            return Err(Error::UnknownChannel(label.clone()));
        }
    }
    let mut data = vec![Vec::new(); channels.len()];
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != channels.len() {
            return Err(err(
                i + 1,
                format!("expected {} values, found {}", channels.len(), cells.len()),
            ));
        }
        for (row, cell) in data.iter_mut().zip(cells) {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| err(i + 1, format!("non-numeric cell {:?}", cell.trim())))?;
            if !v.is_finite() {
                return Err(err(i + 1, format!("non-finite value {:?}", cell.trim())));
            }
            row.push(v);
        }
    }
    if data[0].is_empty() {
        return Err(err(3, "no samples".into()));
    }
    Recording::new(channels, fs, data, subject_id)
}

/// Loads an EEG CSV; the subject id is the file stem.
pub fn load_recording(path: impl AsRef<Path>, montage: &Montage) -> Result<Recording> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let subject = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_recording(&text, path, montage, &subject)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Recording> {
        parse_recording(text, Path::new("t.csv"), &Montage::default_28(), "s1")
    }

    #[test]
    fn parses_three_channels() {
        let mut text = String::from("fs=100\nCz,C1,C2\n");
        for i in 0..500 {
            text.push_str(&format!("{i},{}.5,-{i}\n", i * 2));
        }
        let r = parse(&text).unwrap();
        assert_eq!((r.n_channels(), r.n_samples(), r.fs), (3, 500, 100.0));
        assert_eq!(r.data[1][3], 6.5);
        assert_eq!(r.duration_s(), 5.0);
    }

    #[test]
    fn unknown_label_is_named() {
        match parse("fs=100\nCz,XX\n1,2\n") {
            Err(Error::UnknownChannel(l)) => assert_eq!(l, "XX"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(parse("rate=100\nCz\n1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("fs=100\nCz,C1\n1,2\n3\n"), Err(Error::Parse { line: 4, .. })));
        assert!(matches!(parse("fs=100\nCz\nabc\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse("fs=100\nCz\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn select_reorders() {
        let r = Recording::new(
            vec!["Cz".into(), "C1".into()],
            100.0,
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            "s",
        )
        .unwrap();
        let s = r.select(&["C1", "Cz"]).unwrap();
        assert_eq!(s.data, vec![vec![3.0, 4.0], vec![1.0, 2.0]]);
        assert!(r.select(&["Pz"]).is_err());
    }
}
