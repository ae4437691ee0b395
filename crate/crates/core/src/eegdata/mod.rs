//! Montages, neighbour maps, EEG CSV ingestion and synthetic recordings.

mod montage;
mod neighbors;
mod recording;
mod synthetic;

pub use montage::{ElectrodePosition, Montage};
pub use neighbors::{build_neighbor_map, NeighborMap, DEFAULT_NEIGHBOR_THRESHOLD};
pub use recording::{load_recording, parse_recording, Recording};
pub use synthetic::{
    benchmark_cohort, generate_synthetic, SyntheticRecording, SyntheticSpec, SyntheticTruth,
    BAND_TONES_HZ, BENCHMARK_CHANNELS, BENCHMARK_PHASE_DRIFT, BENCHMARK_TARGET,
};
