//! Eval-mode reconstruction of target channels from trained models.

use super::plan::subject_of;
use crate::autodiff::{Mode, SeededRng};
use crate::eegdata::NeighborMap;
use crate::error::{Error, Result};
use crate::preprocess::{reference_plan, WindowSet};
use crate::rexfernet::{Model, ReferenceStats};

/// Where output scaling statistics come from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scaling {
    /// The target window's own mean and standard deviation.
    Own,
    Reference(ReferenceStats),
}

/// Reconstructs the target channel of window `b`.
pub fn reconstruct(model: &mut Model, ws: &WindowSet, b: usize, target: usize, nmap: &NeighborMap, scaling: Scaling) -> Result<Vec<f64>> {
    let reference = match scaling {
        Scaling::Own => ReferenceStats::of(ws.channel(b, target), b)?,
        Scaling::Reference(r) => r,
    };
    model.reconstruct(&ws.window_channels(b), target, nmap, &reference)
}

/// Reconstructions of the target channel for every window: clean windows
/// scaled by their own statistics, noisy ones by the most recent clean
/// window's. Noisy windows before any clean window come back as `None`.
pub fn reconstruct_set(model: &mut Model, ws: &WindowSet, target: usize, nmap: &NeighborMap, batch: usize) -> Result<Vec<Option<Vec<f64>>>> {
    if ws.channels != nmap.labels {
        return Err(Error::InvalidArgument(format!(
            "window set {:?} channels do not match the neighbour map",
            subject_of(ws).unwrap_or("?")
        )));
    }
    let refs = reference_plan(ws, target);
    let todo: Vec<(usize, ReferenceStats)> = refs.iter().enumerate().filter_map(|(b, r)| r.map(|r| (b, r))).collect();
    let mut out = vec![None; ws.len()];
    let mut rng = SeededRng::new(0);
    for chunk in todo.chunks(batch.max(1)) {
        let windows: Vec<Vec<&[f64]>> = chunk.iter().map(|&(b, _)| ws.window_channels(b)).collect();
        let input = model.neighborhood_batch(&windows, target, nmap, Mode::Eval, &mut rng)?;
        let stats: Vec<ReferenceStats> = chunk.iter().map(|&(_, r)| r).collect();
        let recon = model.forward(&input, &stats, Mode::Eval, &mut rng)?.recon;
        let w = ws.window;
        for (i, &(b, _)) in chunk.iter().enumerate() {
            out[b] = Some(recon.data()[i * w..(i + 1) * w].to_vec());
        }
    }
    Ok(out)
}
