//! Independent training runs over variants and seeds, optionally spread
//! over worker threads. Results come back in job order whatever the worker
//! count, so output is deterministic.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::fit::{train_channel, TrainOutcome};
use super::plan::{assemble_dataset, TrainPlan};
use crate::eegdata::NeighborMap;
use crate::error::{Error, Result};
use crate::preprocess::WindowSet;
use crate::rexfernet::ModelConfig;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "REXFER_WORKERS";

pub fn workers_from_env() -> usize {
    std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()).filter(|&n| n > 0).unwrap_or(1)
}

#[derive(Clone, Debug)]
pub struct GridJob {
    pub config: ModelConfig,
    pub seed: u64,
}

pub struct GridRun {
    pub job: GridJob,
    pub outcome: TrainOutcome,
}

/// Trains every job with `plan` (its seed replaced by the job's seed, which
/// also reseeds the train/validation split).
pub fn train_grid(sets: &[WindowSet], nmap: &NeighborMap, plan: &TrainPlan, jobs: &[GridJob], workers: usize) -> Result<Vec<GridRun>> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<TrainOutcome>>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let work = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        if i >= jobs.len() {
            break;
        }
        let job = &jobs[i];
        let plan = TrainPlan { seed: job.seed, ..plan.clone() };
        let res = assemble_dataset(sets, nmap, &plan).and_then(|ds| train_channel(&ds, &plan, job.config.clone()));
        *slots[i].lock().expect("result slot") = Some(res);
    };
    let workers = workers.clamp(1, jobs.len().max(1));
    if workers == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(work);
            }
        });
    }
    jobs.iter()
        .zip(slots)
        .map(|(job, slot)| {
            let outcome = slot.into_inner().expect("result slot").ok_or_else(|| Error::InvalidArgument("job not run".into()))??;
            Ok(GridRun { job: job.clone(), outcome })
        })
        .collect()
}
