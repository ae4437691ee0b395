//! Cross-subject training of one model per target channel: dataset
//! assembly, the Adam loop with early stopping, logs and reconstruction.

mod fit;
mod grid;
mod infer;
mod plan;

pub use fit::{
    evaluate_loss, prepare_batch, train_channel, train_channel_with, EarlyStopping, EpochRecord, PreparedBatch,
    StopReason, TrainOutcome, TrainTrace,
};
pub use grid::{train_grid, workers_from_env, GridJob, GridRun, WORKERS_ENV};
pub use infer::{reconstruct, reconstruct_set, Scaling};
pub use plan::{assemble_dataset, neighbor_map_for, subject_of, Dataset, TrainPlan, WindowRef};
