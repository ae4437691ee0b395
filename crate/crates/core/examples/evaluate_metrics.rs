//! Scores a naive neighbour-average reconstruction with the full metric
//! suite, as a reference point for trained models.

use rexfer::dsp::{mean, std_dev, FilterSpec};
use rexfer::eegdata::*;
use rexfer::evalstats::*;
use rexfer::preprocess::*;

fn main() -> rexfer::Result<()> {
    let rec = benchmark_cohort(1, 60.0, 7)?.remove(0).recording;
    let ws = prepare_recording(&rec, &FilterSpec::default())?;
    let cz = ws.channel_index("Cz")?;
    let others: Vec<usize> = (0..ws.n_channels()).filter(|&c| c != cz).collect();

    // z-score each neighbour, average, then restore the target's own moments
    let recons: Vec<Option<Vec<f64>>> = (0..ws.len())
        .map(|b| {
            let mut avg = vec![0.0; ws.window];
            for &c in &others {
                let x = ws.channel(b, c);
                let (m, s) = (mean(x), std_dev(x));
                avg.iter_mut().zip(x).for_each(|(a, v)| *a += (v - m) / s / others.len() as f64);
            }
            let (m, s) = (mean(&avg), std_dev(&avg));
            Some(avg.iter().map(|a| ws.mean(b, cz) + ws.sd(b, cz) * (a - m) / s).collect())
        })
        .collect();
    let report = evaluate_windowset(&ws, cz, &recons)?.with_variant("neighbour-average");
    println!("{:<24} {:>10} {:>10}", "metric", "clean", "noisy");
    for m in METRICS {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!("{m:<24} {:>10} {:>10}", f(report.clean_mean(m)), f(report.noisy_mean(m)));
    }
    Ok(())
}
