//! Recording-to-window pipeline: band-pass filtering, 2.56 s windows every
//! 100 ms, recentring with optional jitter, clean/noisy labelling and
//! reference statistics for noisy windows.

mod pipeline;
mod windows;

pub use pipeline::{
    prepare_recording, prepare_recording_with, preprocess_recording, recenter_channel, recenter_perturb, reference_plan, segment, stratify,
    stratify_with, track_reference, Perturbation, PreprocessConfig, CLEAN_Z, STRIDE_S, WINDOW_S,
};
pub use windows::{Manifest, WindowLabel, WindowOrigin, WindowSet, MANIFEST_FORMAT, MANIFEST_VERSION};
