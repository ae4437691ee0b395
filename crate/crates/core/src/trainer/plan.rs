//! Training plans and leave-one-subject-out dataset assembly.

use serde::{Deserialize, Serialize};

use crate::autodiff::SeededRng;
use crate::eegdata::{build_neighbor_map, Montage, NeighborMap};
use crate::error::{Error, Result};
use crate::preprocess::{Perturbation, WindowSet};

const SPLIT_STREAM: u64 = 0x5917;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainPlan {
    pub train_subjects: Vec<String>,
    pub held_out_subject: Option<String>,
    /// Target channel label.
    pub channel: String,
    pub batch: usize,
    pub lr: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub val_fraction: f64,
    pub seed: u64,
    pub grad_clip: f64,
    pub perturbation: Perturbation,
    pub jitter: f64,
    /// Keep every `window_step`-th clean window of each subject. Windows at
    /// a 100 ms stride overlap by 96%, so thinning trades little data for
    /// a proportional speed-up.
    pub window_step: usize,
}

impl Default for TrainPlan {
    fn default() -> Self {
        Self {
            train_subjects: Vec::new(),
            held_out_subject: None,
            channel: "Cz".into(),
            batch: 64,
            lr: 1e-3,
            max_epochs: 250,
            patience: 25,
            val_fraction: 0.2,
            seed: 0,
            grad_clip: crate::losses::GRAD_CLIP_NORM,
            perturbation: Perturbation::Amplitude,
            jitter: 0.1,
            window_step: 1,
        }
    }
}

impl TrainPlan {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.train_subjects.is_empty() {
            return bad("no training subjects".into());
        }
        if let Some(h) = &self.held_out_subject {
            if self.train_subjects.contains(h) {
                return bad(format!("held-out subject {h} is also a training subject"));
            }
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return bad(format!("val_fraction must lie in (0, 1), got {}", self.val_fraction));
        }
        if self.batch == 0 || self.max_epochs == 0 || self.window_step == 0 {
            return bad("batch, max_epochs and window_step must be positive".into());
        }
        if !(self.lr > 0.0 && self.grad_clip > 0.0) || !(0.0..1.0).contains(&self.jitter) {
            return bad("lr and grad_clip must be positive and jitter in [0, 1)".into());
        }
        Ok(())
    }
}

/// One window of one training subject.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowRef {
    pub set: usize,
    pub window: usize,
}

/// Clean training windows split into train and validation parts.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub sets: Vec<WindowSet>,
    pub subjects: Vec<String>,
    pub nmap: NeighborMap,
    pub target: usize,
    pub train: Vec<WindowRef>,
    pub val: Vec<WindowRef>,
}

impl Dataset {
    /// Consecutive batches of `refs`; the last one may be partial.
    pub fn batches(refs: &[WindowRef], batch: usize) -> impl Iterator<Item = &[WindowRef]> {
        refs.chunks(batch.max(1))
    }
}

/// Subject of a window set, taken from its first window.
pub fn subject_of(ws: &WindowSet) -> Option<&str> {
    ws.origins.first().map(|o| o.subject.as_str())
}

/// Neighbour map over exactly the channels of `ws`, in its channel order.
pub fn neighbor_map_for(ws: &WindowSet, montage: &Montage, threshold: f64) -> Result<NeighborMap> {
    build_neighbor_map(&montage.subset(&ws.channels)?, threshold)
}

/// Picks the training subjects' sets out of `sets`, keeps their clean
/// windows and splits them 80/20 (by `plan.val_fraction`) with a shuffle
/// seeded by `plan.seed`. The held-out subject is never used.
pub fn assemble_dataset(sets: &[WindowSet], nmap: &NeighborMap, plan: &TrainPlan) -> Result<Dataset> {
    plan.validate()?;
    let mut chosen = Vec::new();
    for subject in &plan.train_subjects {
        let ws = sets
            .iter()
            .find(|ws| subject_of(ws) == Some(subject.as_str()))
            .ok_or_else(|| Error::InvalidArgument(format!("no window set for training subject {subject}")))?;
        if ws.channels != nmap.labels {
            return Err(Error::InvalidArgument(format!(
                "subject {subject}: channels {:?} do not match the neighbour map {:?}",
                ws.channels, nmap.labels
            )));
        }
        if ws.clean_indices().is_empty() {
            return Err(Error::InvalidArgument(format!("training subject {subject} has no clean windows")));
        }
        chosen.push(ws.clone());
    }
    let target = nmap.index_of(&plan.channel).ok_or_else(|| Error::UnknownChannel(plan.channel.clone()))?;
    let mut all: Vec<WindowRef> = chosen
        .iter()
        .enumerate()
        .flat_map(|(s, ws)| {
            ws.clean_indices()
                .into_iter()
                .step_by(plan.window_step)
                .map(move |window| WindowRef { set: s, window })
        })
        .collect();
    if all.len() < 2 * plan.batch {
        return Err(Error::InvalidArgument(format!(
            "{} clean windows, need at least {}",
            all.len(),
            2 * plan.batch
        )));
    }
    SeededRng::new(plan.seed).fork(SPLIT_STREAM).shuffle(&mut all);
    let n_val = ((all.len() as f64) * plan.val_fraction).round() as usize;
    let val = all.split_off(all.len() - n_val);
    Ok(Dataset {
        sets: chosen,
        subjects: plan.train_subjects.clone(),
        nmap: nmap.clone(),
        target,
        train: all,
        val,
    })
}
