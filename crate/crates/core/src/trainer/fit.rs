//! The training loop: Adam with gradient clipping, per-epoch validation in
//! eval mode and early stopping on the validation total.

use std::borrow::Cow;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::plan::{Dataset, TrainPlan, WindowRef};
use crate::autodiff::{adam_step, clip_grad_norm, AdamState, Mode, SeededRng, Tensor};
use crate::error::{Error, Result};
use crate::losses::LossBreakdown;
use crate::preprocess::recenter_channel;
use crate::rexfernet::{loss_and_backward, Model, ModelConfig, ReferenceStats};

const INIT_STREAM: u64 = 0x1417;
const EPOCH_STREAM: u64 = 0xE90C;
const VAL_STREAM: u64 = 0x7A1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Patience,
    MaxEpochs,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::Patience => "patience",
            StopReason::MaxEpochs => "max_epochs",
        })
    }
}

/// Tracks the best validation loss; stops after `patience` epochs without a
/// strict improvement.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best: f64,
    pub best_epoch: usize,
    since: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self { patience, best: f64::INFINITY, best_epoch: 0, since: 0 }
    }

    /// Records an epoch's validation loss; true when it is a new best.
    pub fn observe(&mut self, epoch: usize, val: f64) -> bool {
        if val < self.best {
            self.best = val;
            self.best_epoch = epoch;
            self.since = 0;
            true
        } else {
            self.since += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.since >= self.patience
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train: LossBreakdown,
    pub val: LossBreakdown,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val: f64,
    pub stop: StopReason,
}

impl TrainTrace {
    pub fn csv_header() -> String {
        let mut cols = vec!["epoch".to_string()];
        for split in ["train", "val"] {
            cols.extend(LossBreakdown::FIELDS.iter().map(|f| format!("{split}_{f}")));
        }
        cols.push("wall_time_s".into());
        cols.join(",")
    }

    /// Training log: one row per epoch, losses in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = Self::csv_header();
        out.push('\n');
        for e in &self.epochs {
            let mut row = vec![e.epoch.to_string()];
            row.extend(e.train.values().iter().chain(e.val.values().iter()).map(|v| v.to_string()));
            row.push(format!("{:.3}", e.wall_time_s));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

pub struct TrainOutcome {
    /// Model holding the best-epoch parameters.
    pub model: Model,
    pub trace: TrainTrace,
}

/// Model input, target and scaling statistics of one batch.
pub struct PreparedBatch {
    pub input: Tensor,
    pub target: Tensor,
    pub refs: Vec<ReferenceStats>,
}

/// Recentres the target and its neighbours of every window (with amplitude
/// or mean jitter in train mode) and stacks the model input. The target's
/// own statistics after recentring are its scaling reference.
pub fn prepare_batch(
    ds: &Dataset,
    items: &[WindowRef],
    model: &Model,
    plan: &TrainPlan,
    mode: Mode,
    rng: &mut SeededRng,
) -> Result<PreparedBatch> {
    let t = ds.target;
    let mut needed = ds.nmap.of(t).to_vec();
    needed.push(t);
    let mut owned: Vec<Vec<Cow<'_, [f64]>>> = Vec::with_capacity(items.len());
    let mut target = Vec::with_capacity(items.len() * model.config().window);
    let mut refs = Vec::with_capacity(items.len());
    for it in items {
        let ws = &ds.sets[it.set];
        let mut chans: Vec<Cow<'_, [f64]>> = (0..ws.n_channels()).map(|c| Cow::Borrowed(ws.channel(it.window, c))).collect();
        for &c in &needed {
            let g = match mode {
                Mode::Train => rng.uniform_range(1.0 - plan.jitter, 1.0 + plan.jitter),
                Mode::Eval => 1.0,
            };
            let mut x = ws.channel(it.window, c).to_vec();
            recenter_channel(&mut x, ws.mean(it.window, c), ws.global_means[c], ws.global_sds[c], g, plan.perturbation);
            chans[c] = Cow::Owned(x);
        }
        refs.push(ReferenceStats::of(&chans[t], it.window)?);
        target.extend_from_slice(&chans[t]);
        owned.push(chans);
    }
    let views: Vec<Vec<&[f64]>> = owned.iter().map(|w| w.iter().map(|c| c.as_ref()).collect()).collect();
    let input = model.neighborhood_batch(&views, t, &ds.nmap, mode, rng)?;
    let target = Tensor::new(vec![items.len(), model.config().window], target)?;
    Ok(PreparedBatch { input, target, refs })
}

fn non_finite(epoch: usize, e: Error) -> Error {
    match e {
        Error::NonFinite { op } => {
            let component = ["mse", "mag", "phase", "mobility", "latent", "s_mse", "s_mag", "product"]
                .into_iter()
                .find(|c| op.contains(&format!("({c})")))
                .unwrap_or("forward");
            Error::NonFiniteLoss { epoch, component }
        }
        other => other,
    }
}

/// Mean loss over `refs` without updating parameters.
pub fn evaluate_loss(model: &mut Model, ds: &Dataset, refs: &[WindowRef], plan: &TrainPlan, mode: Mode, rng: &mut SeededRng) -> Result<LossBreakdown> {
    let mut acc = LossBreakdown::default();
    for items in Dataset::batches(refs, plan.batch) {
        let b = prepare_batch(ds, items, model, plan, mode, rng)?;
        let l = loss_and_backward(model, &b.input, &b.target, &b.refs, mode, rng, false)?;
        acc.add_scaled(&l, items.len() as f64 / refs.len() as f64);
    }
    Ok(acc)
}

/// Trains one model for the dataset's target channel. The neighbour count
/// of `config` is set from the neighbour map. Every random draw derives
/// from `plan.seed`, so a rerun reproduces the trace and checkpoint.
pub fn train_channel(ds: &Dataset, plan: &TrainPlan, config: ModelConfig) -> Result<TrainOutcome> {
    train_channel_with(ds, plan, config, |_| {})
}

/// [`train_channel`] with a callback after every epoch.
pub fn train_channel_with(
    ds: &Dataset,
    plan: &TrainPlan,
    config: ModelConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    plan.validate()?;
    if ds.train.is_empty() || ds.val.is_empty() {
        return Err(Error::InvalidArgument("empty training or validation split".into()));
    }
    let k = ds.nmap.of(ds.target).len();
    let config = config.with_neighbors(k);
    let base = SeededRng::new(plan.seed);
    let mut model = Model::new(config, &mut base.fork(INIT_STREAM))?;
    let mut adam = AdamState::new(plan.lr);
    let mut stopper = EarlyStopping::new(plan.patience);
    let mut best = model.to_checkpoint();
    let mut epochs = Vec::new();
    let start = Instant::now();
    let mut stop = StopReason::MaxEpochs;
    for epoch in 1..=plan.max_epochs {
        let mut rng = base.fork(EPOCH_STREAM).fork(epoch as u64);
        let mut order = ds.train.clone();
        rng.shuffle(&mut order);
        let mut train = LossBreakdown::default();
        for items in Dataset::batches(&order, plan.batch) {
            let b = prepare_batch(ds, items, &model, plan, Mode::Train, &mut rng)?;
            model.zero_grad();
            let l = loss_and_backward(&mut model, &b.input, &b.target, &b.refs, Mode::Train, &mut rng, true)
                .map_err(|e| non_finite(epoch, e))?;
            train.add_scaled(&l, items.len() as f64 / order.len() as f64);
            let mut params = model.params_mut();
            let norm = clip_grad_norm(&mut params, plan.grad_clip);
            if !norm.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, component: "gradient" });
            }
            adam_step(&mut params, &mut adam)?;
        }
        let mut vrng = base.fork(VAL_STREAM);
        let val = evaluate_loss(&mut model, ds, &ds.val, plan, Mode::Eval, &mut vrng).map_err(|e| non_finite(epoch, e))?;
        let record = EpochRecord { epoch, train, val, wall_time_s: start.elapsed().as_secs_f64() };
        on_epoch(&record);
        epochs.push(record);
        if stopper.observe(epoch, val.total) {
            best = model.to_checkpoint();
        }
        if stopper.should_stop() {
            stop = StopReason::Patience;
            break;
        }
    }
    model.load_checkpoint(&best)?;
    Ok(TrainOutcome {
        model,
        trace: TrainTrace { epochs, best_epoch: stopper.best_epoch, best_val: stopper.best, stop },
    })
}
