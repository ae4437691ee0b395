//! Signal-processing primitives shared by preprocessing, the loss and the
//! evaluation metrics. Everything here is a pure function of its inputs.

mod features;
mod fft;
mod filter;
mod spectral;

pub use features::{
    entropy_spectral, entropy_temporal, estimate_pdf, hjorth_mobility, mean, shannon,
    shared_range, std_dev, variance, ENTROPY_BINS, PDF_BINS,
};
pub use fft::RealFft;
pub use filter::{design_butterworth_bandpass, zero_phase_filter, Biquad, BiquadCascade, FilterSpec};
pub use rustfft::num_complex::Complex64;
pub use spectral::{
    hann, integrate_band, relative_band_power, stft_default, stft_spectrogram, welch_default,
    welch_psd, PsdEstimate, Spectrogram, BAND_NAMES, EEG_BANDS, STFT_HOP, STFT_WINDOW,
    WELCH_OVERLAP, WELCH_SEGMENT,
};
