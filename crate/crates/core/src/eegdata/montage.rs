//! Electrode layouts and the `label,x,y` montage format.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_MONTAGE_CSV: &str = include_str!("../../data/montage_28.csv");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElectrodePosition {
    pub label: String,
    pub x: f64,
    pub y: f64,
}

impl ElectrodePosition {
    pub fn new(label: impl Into<String>, x: f64, y: f64) -> Self {
        Self { label: label.into(), x, y }
    }

    pub fn distance(&self, other: &ElectrodePosition) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Ordered set of electrodes with unique labels and finite coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Montage {
    positions: Vec<ElectrodePosition>,
}

impl Montage {
    pub fn new(positions: Vec<ElectrodePosition>) -> Result<Self> {
        let mut seen = HashSet::new();
        for p in &positions {
            if !seen.insert(p.label.as_str()) {
                return Err(Error::Config(format!("duplicate electrode label {:?}", p.label)));
            }
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::Config(format!("non-finite coordinates for {:?}", p.label)));
            }
        }
        Ok(Self { positions })
    }

    /// The shipped 28-channel sensorimotor layout. Grid spacing is 0.04, so
    /// orthogonally adjacent electrodes sit inside the 0.05 neighbour radius
    /// and diagonal ones (0.057) fall outside it.
    pub fn default_28() -> Self {
        Self::parse(DEFAULT_MONTAGE_CSV, Path::new("<builtin montage>"))
            .expect("builtin montage is well formed")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&std::fs::read_to_string(path)?, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim().eq_ignore_ascii_case("label,x,y") => {}
            Some((i, h)) => return Err(err(i + 1, format!("expected header `label,x,y`, found {h:?}"))),
            None => return Err(err(1, "empty montage file".into())),
        }
        let mut positions = Vec::new();
        for (i, line) in lines {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != 3 {
                return Err(err(i + 1, format!("expected 3 cells, found {}", cells.len())));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| err(i + 1, format!("non-numeric coordinate {s:?}")))
            };
            positions.push(ElectrodePosition::new(cells[0], num(cells[1])?, num(cells[2])?));
        }
        Self::new(positions)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,x,y\n");
        for p in &self.positions {
            out.push_str(&format!("{},{},{}\n", p.label, p.x, p.y));
        }
        out
    }

    pub fn positions(&self) -> &[ElectrodePosition] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.positions.iter().map(|p| p.label.as_str()).collect()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.positions.iter().position(|p| p.label == label)
    }

    pub fn get(&self, label: &str) -> Option<&ElectrodePosition> {
        self.positions.iter().find(|p| p.label == label)
    }

    /// Sub-montage in the order given by `labels`.
    pub fn subset<S: AsRef<str>>(&self, labels: &[S]) -> Result<Montage> {
        let positions = labels
            .iter()
            .map(|l| {
                self.get(l.as_ref())
                    .cloned()
                    .ok_or_else(|| Error::UnknownChannel(l.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Montage::new(positions)
    }
}
