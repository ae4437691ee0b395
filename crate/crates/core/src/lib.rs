//! Neighbour-based EEG channel reconstruction with a sub-window convolutional VAE.

pub mod autodiff;
pub mod cli;
pub mod dsp;
pub mod eegdata;
pub mod error;
pub mod evalstats;
pub mod losses;
pub mod preprocess;
pub mod rexfernet;
pub mod trainer;

pub use error::{Error, Result};
