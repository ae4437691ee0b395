//! Trains one variant on three synthetic subjects and reports the loss
//! curve. Usage: `train_variant [A|B|C|D] [epochs]`.

use rexfer::dsp::FilterSpec;
use rexfer::eegdata::*;
use rexfer::preprocess::*;
use rexfer::rexfernet::*;
use rexfer::trainer::*;

fn main() -> rexfer::Result<()> {
    let mut args = std::env::args().skip(1);
    let variant: Variant = args.next().as_deref().unwrap_or("D").parse()?;
    let epochs: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(15);

    let cohort = benchmark_cohort(4, 60.0, 7)?;
    let sets = cohort
        .iter()
        .map(|s| prepare_recording(&s.recording, &FilterSpec::default()))
        .collect::<rexfer::Result<Vec<_>>>()?;
    let nmap = neighbor_map_for(&sets[0], &Montage::default_28(), DEFAULT_NEIGHBOR_THRESHOLD)?;
    let plan = TrainPlan {
        train_subjects: vec!["sub01".into(), "sub02".into(), "sub03".into()],
        held_out_subject: Some("sub04".into()),
        max_epochs: epochs,
        window_step: 8,
        ..TrainPlan::default()
    };
    let ds = assemble_dataset(&sets, &nmap, &plan)?;
    println!("variant {variant}: {} train / {} validation windows", ds.train.len(), ds.val.len());
    let out = train_channel_with(&ds, &plan, ModelConfig::paper(variant), |e| {
        println!("epoch {:>3}  train {:>9.4}  val {:>9.4}  val mse {:>8.3}  ({:.1}s)", e.epoch, e.train.total, e.val.total, e.val.mse, e.wall_time_s);
    })?;
    println!("best epoch {} (val {:.4}), stopped on {}", out.trace.best_epoch, out.trace.best_val, out.trace.stop);

    let path = std::env::temp_dir().join(format!("rexfer_{variant}.ckpt"));
    out.model.save(&path)?;
    println!("checkpoint written to {}", path.display());
    Ok(())
}
