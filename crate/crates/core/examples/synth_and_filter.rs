//! Generates a synthetic recording, band-passes it and compares the band
//! powers of a channel before and after filtering.

use rexfer::dsp::*;
use rexfer::eegdata::*;

fn main() -> rexfer::Result<()> {
    let spec = SyntheticSpec { seed: 3, duration_s: 30.0, ..SyntheticSpec::default() };
    let synth = generate_synthetic(&spec)?;
    let rec = &synth.recording;
    println!("{} channels x {} samples at {} Hz, {} spikes", rec.n_channels(), rec.n_samples(), rec.fs, synth.truth.spike_peaks.len());

    let filt = FilterSpec::default();
    let cascade = design_butterworth_bandpass(filt.order, filt.low_hz, filt.high_hz, rec.fs)?;
    for f in [0.1, 0.5, 10.0, 40.0, 50.0] {
        // forward-backward filtering squares the single-pass magnitude
        println!("  |H({f:>4} Hz)|^2 = {:.4}", cascade.magnitude(f).powi(2));
    }

    let raw = rec.channel("Cz")?;
    let clean = zero_phase_filter(raw, &cascade)?;
    let (before, after) = (welch_default(raw, rec.fs)?, welch_default(&clean, rec.fs)?);
    let (rb, ra) = (relative_band_power(&before, &EEG_BANDS)?, relative_band_power(&after, &EEG_BANDS)?);
    for (i, name) in BAND_NAMES.iter().enumerate() {
        println!("{name:>6}: raw {:.3}  filtered {:.3}", rb[i], ra[i]);
    }
    Ok(())
}
