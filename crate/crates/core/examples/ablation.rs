//! Small ablation of all four variants through the same entry point as the
//! `ablate` subcommand, writing its tables to a temporary directory.

use rexfer::cli::{cmd_ablate, RunConfig};
use rexfer::dsp::FilterSpec;
use rexfer::eegdata::*;
use rexfer::preprocess::*;
use rexfer::trainer::*;

fn main() -> rexfer::Result<()> {
    let root = std::env::temp_dir().join("rexfer_ablation_example");
    let mut dirs = Vec::new();
    for s in benchmark_cohort(4, 60.0, 7)? {
        let ws = prepare_recording(&s.recording, &FilterSpec::default())?;
        let dir = root.join("windows").join(&s.recording.subject_id);
        ws.save(&dir)?;
        dirs.push(dir);
    }
    let mut cfg = RunConfig::default();
    cfg.train.held_out_subject = Some("sub04".into());
    cfg.train.max_epochs = 8;
    cfg.train.window_step = 12;
    cfg.ablation.seeds = vec![0, 1];

    let summary = cmd_ablate(&dirs, &cfg, &root.join("out"), workers_from_env())?;
    for (v, seed, params, epoch, val) in &summary.runs {
        println!("{v} seed {seed}: {params:>7} params, best val {val:.4} at epoch {epoch}");
    }
    println!("\n{}", summary.report.to_csv());
    println!("tables in {}", root.join("out").display());
    Ok(())
}
