//! Reconstructs the target channel of a held-out subject, rescaling noisy
//! windows with the statistics of the latest clean window.

use rexfer::dsp::{std_dev, FilterSpec};
use rexfer::eegdata::*;
use rexfer::preprocess::*;
use rexfer::rexfernet::*;
use rexfer::trainer::*;

fn main() -> rexfer::Result<()> {
    let cohort = benchmark_cohort(4, 60.0, 7)?;
    let sets = cohort
        .iter()
        .map(|s| prepare_recording(&s.recording, &FilterSpec::default()))
        .collect::<rexfer::Result<Vec<_>>>()?;
    let nmap = neighbor_map_for(&sets[0], &Montage::default_28(), DEFAULT_NEIGHBOR_THRESHOLD)?;
    let plan = TrainPlan {
        train_subjects: vec!["sub01".into(), "sub02".into(), "sub03".into()],
        max_epochs: 10,
        window_step: 8,
        ..TrainPlan::default()
    };
    let ds = assemble_dataset(&sets, &nmap, &plan)?;
    let mut model = train_channel(&ds, &plan, ModelConfig::paper(Variant::D))?.model;

    let held = &sets[3];
    let cz = held.channel_index("Cz")?;
    let recons = reconstruct_set(&mut model, held, cz, &nmap, 64)?;
    for b in held.noisy_indices().into_iter().take(6) {
        let Some(r) = &recons[b] else {
            println!("window {b:>3}: no clean window yet, skipped");
            continue;
        };
        let orig = held.channel(b, cz);
        let peak = |x: &[f64]| x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        println!(
            "window {b:>3}: original sd {:>6.2} peak {:>6.1} | reconstruction sd {:>6.2} peak {:>6.1}",
            std_dev(orig),
            peak(orig),
            std_dev(r),
            peak(r)
        );
    }
    Ok(())
}
