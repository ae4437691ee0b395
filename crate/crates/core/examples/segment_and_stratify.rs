//! Windows a filtered recording, labels clean and noisy windows, and shows
//! which clean window supplies the rescaling statistics of each noisy one.

use rexfer::dsp::FilterSpec;
use rexfer::eegdata::*;
use rexfer::preprocess::*;

fn main() -> rexfer::Result<()> {
    let spec = SyntheticSpec { seed: 1, spike_rate_per_min: 12.0, ..SyntheticSpec::default() };
    let rec = generate_synthetic(&spec)?.recording;
    let ws = prepare_recording(&rec, &FilterSpec::default())?;
    println!(
        "{} windows of {} samples (stride {}): {} clean, {} noisy",
        ws.len(),
        ws.window,
        ws.stride,
        ws.clean_indices().len(),
        ws.noisy_indices().len()
    );

    let cz = ws.channel_index("Cz")?;
    for (b, stats) in track_reference(&ws, cz)?.into_iter().take(8) {
        println!("noisy window {b:>3} (t = {:.1}s) uses window {} mean {:.2} sd {:.2}", ws.origins[b].start as f64 / ws.fs, stats.source, stats.mean, stats.sd);
    }

    let dir = std::env::temp_dir().join("rexfer_windows_example");
    ws.save(&dir)?;
    let back = WindowSet::load(&dir)?;
    println!("saved to {} and reloaded: identical = {}", dir.display(), back == ws);
    Ok(())
}
