//! Distance-threshold neighbour lists over a montage.

use serde::{Deserialize, Serialize};

use super::montage::Montage;
use crate::error::{Error, Result};

pub const DEFAULT_NEIGHBOR_THRESHOLD: f64 = 0.05;

/// For every channel, the indices of the other channels within `threshold`
/// (inclusive), nearest first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborMap {
    pub labels: Vec<String>,
    pub neighbors: Vec<Vec<usize>>,
    pub threshold: f64,
}

impl NeighborMap {
    /// Neighbour lists without the every-channel-has-a-neighbour check.
    /// Equal distances are ordered by label.
    pub fn from_montage(montage: &Montage, threshold: f64) -> Self {
        let pos = montage.positions();
        let neighbors = pos
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let mut near: Vec<(f64, usize)> = pos
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(j, b)| (a.distance(b), j))
                    .filter(|&(d, _)| d <= threshold)
                    .collect();
                near.sort_by(|x, y| {
                    x.0.total_cmp(&y.0).then_with(|| pos[x.1].label.cmp(&pos[y.1].label))
                });
                near.into_iter().map(|(_, j)| j).collect()
            })
            .collect();
        Self {
            labels: montage.labels().iter().map(|s| s.to_string()).collect(),
            neighbors,
            threshold,
        }
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn of(&self, channel: usize) -> &[usize] {
        &self.neighbors[channel]
    }

    pub fn of_label(&self, label: &str) -> Result<&[usize]> {
        let idx = self
            .index_of(label)
            .ok_or_else(|| Error::UnknownChannel(label.to_string()))?;
        Ok(self.of(idx))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Neighbour map that rejects montages where some channel is isolated.
pub fn build_neighbor_map(montage: &Montage, threshold: f64) -> Result<NeighborMap> {
    if montage.len() < 2 {
        return Err(Error::Config("a neighbour map needs at least two electrodes".into()));
    }
    if !(threshold > 0.0) {
        return Err(Error::Config(format!("neighbour threshold must be positive, got {threshold}")));
    }
    let map = NeighborMap::from_montage(montage, threshold);
    if let Some(i) = map.neighbors.iter().position(Vec::is_empty) {
        return Err(Error::NoNeighbours(map.labels[i].clone()));
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eegdata::ElectrodePosition;

    fn pair(d: f64) -> Montage {
        Montage::new(vec![ElectrodePosition::new("A", 0.0, 0.0), ElectrodePosition::new("B", d, 0.0)])
            .unwrap()
    }

    #[test]
    fn threshold_is_inclusive() {
        let m = build_neighbor_map(&pair(0.04), 0.05).unwrap();
        assert_eq!(m.neighbors, vec![vec![1], vec![0]]);
        assert!(build_neighbor_map(&pair(0.05), 0.05).is_ok());
        match build_neighbor_map(&pair(0.06), 0.05) {
            Err(Error::NoNeighbours(l)) => assert_eq!(l, "A"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cz_neighbourhood_in_default_montage() {
        let montage = Montage::default_28();
        let map = build_neighbor_map(&montage, DEFAULT_NEIGHBOR_THRESHOLD).unwrap();
        let mut names: Vec<&str> = map
            .of_label("Cz")
            .unwrap()
            .iter()
            .map(|&j| map.labels[j].as_str())
            .collect();
        // all at distance 0.04, so label order decides
        assert_eq!(names, vec!["C1", "C2", "CPz", "FCz"]);
        names.sort();
        assert_eq!(names.len(), 4);
    }

    #[test]
    fn nearest_first() {
        let m = Montage::new(vec![
            ElectrodePosition::new("X", 0.0, 0.0),
            ElectrodePosition::new("Far", 0.045, 0.0),
            ElectrodePosition::new("Near", 0.0, 0.01),
        ])
        .unwrap();
        let map = NeighborMap::from_montage(&m, 0.05);
        assert_eq!(map.of(0), &[2, 1]);
    }
}
