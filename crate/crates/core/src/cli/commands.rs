//! Subcommand implementations. Each returns a summary for printing and
//! writes its artefacts under the given output path.

use std::path::{Path, PathBuf};

use super::config::RunConfig;
use crate::eegdata::{benchmark_cohort, generate_synthetic, load_recording, Montage, NeighborMap, SyntheticSpec};
use crate::error::{Error, Result};
use crate::evalstats::{ablation_report, evaluate_windowset, AblationReport, MetricReport};
use crate::preprocess::{prepare_recording_with, WindowLabel, WindowSet};
use crate::rexfernet::{Model, Variant};
use crate::trainer::{
    assemble_dataset, neighbor_map_for, reconstruct_set, subject_of, train_channel_with, train_grid, GridJob, TrainPlan,
    TrainTrace,
};

/// Process exit code for an error: 1 usage/config, 2 data, 3 numeric.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) => 1,
        Error::NonFinite { .. } | Error::NonFiniteLoss { .. } => 3,
        _ => 2,
    }
}

pub fn montage_for(cfg: &RunConfig) -> Result<Montage> {
    match &cfg.montage {
        Some(p) => Montage::load(p),
        None => Ok(Montage::default_28()),
    }
}

fn band_summary(spec: &SyntheticSpec, spikes: usize) -> String {
    let names = ["delta", "theta", "alpha", "beta"];
    let mut s = format!("{} ({} ch, {} s @ {} Hz)", spec.subject_id, spec.channels.len(), spec.duration_s, spec.fs);
    for (i, n) in names.iter().enumerate() {
        s.push_str(&format!(" {n}={}Hz/{}uV", crate::eegdata::BAND_TONES_HZ[i], spec.band_amplitudes[i]));
    }
    s.push_str(&format!(" spikes={spikes}"));
    s
}

/// Writes one synthetic recording to `out` (a CSV path), or with
/// `cohort = Some(n)` the `n`-subject benchmark cohort into directory
/// `out`. Returns one ground-truth line per recording.
pub fn cmd_synth(spec: &SyntheticSpec, cohort: Option<usize>, out: &Path) -> Result<Vec<String>> {
    let recs = match cohort {
        Some(n) => benchmark_cohort(n, spec.duration_s, spec.seed)?,
        None => vec![generate_synthetic(spec)?],
    };
    let mut lines = Vec::new();
    for r in &recs {
        let path = if cohort.is_some() {
            std::fs::create_dir_all(out)?;
            out.join(format!("{}.csv", r.recording.subject_id))
        } else {
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            out.to_path_buf()
        };
        r.recording.write_csv(&path)?;
        let s = SyntheticSpec {
            band_amplitudes: r.truth.band_amplitudes,
            subject_id: r.recording.subject_id.clone(),
            channels: r.recording.channels.clone(),
            duration_s: r.recording.duration_s(),
            fs: r.recording.fs,
            ..spec.clone()
        };
        lines.push(format!("{} -> {}", band_summary(&s, r.truth.spike_peaks.len()), path.display()));
    }
    Ok(lines)
}

/// Filters, segments and labels one recording into a window-set directory.
pub fn cmd_preprocess(input: &Path, out: &Path, cfg: &RunConfig) -> Result<WindowSet> {
    let montage = montage_for(cfg)?;
    let rec = load_recording(input, &montage)?;
    let ws = prepare_recording_with(&rec, &cfg.preprocess)?;
    ws.save(out)?;
    Ok(ws)
}

pub fn load_window_sets(dirs: &[PathBuf]) -> Result<Vec<WindowSet>> {
    dirs.iter().map(WindowSet::load).collect()
}

fn shared_neighbor_map(sets: &[WindowSet], cfg: &RunConfig) -> Result<NeighborMap> {
    let first = sets.first().ok_or_else(|| Error::InvalidArgument("no window sets given".into()))?;
    neighbor_map_for(first, &montage_for(cfg)?, cfg.neighbor_threshold)
}

/// Training subjects: as configured, or every loaded subject except the
/// held-out one.
pub fn resolve_plan(sets: &[WindowSet], cfg: &RunConfig) -> TrainPlan {
    let mut plan = cfg.train.clone();
    if plan.train_subjects.is_empty() {
        plan.train_subjects = sets
            .iter()
            .filter_map(|s| subject_of(s).map(str::to_string))
            .filter(|s| Some(s) != plan.held_out_subject.as_ref())
            .collect();
    }
    plan
}

pub struct TrainSummary {
    pub checkpoint: PathBuf,
    pub trace: TrainTrace,
    pub param_count: usize,
}

/// Trains `cfg.variant` for `cfg.train.channel`; writes `model.ckpt` (+
/// sidecar), `train_log.csv`, `trace.json` and the effective `run.json`.
pub fn cmd_train(dirs: &[PathBuf], cfg: &RunConfig, out: &Path, mut progress: impl FnMut(&str)) -> Result<TrainSummary> {
    let sets = load_window_sets(dirs)?;
    let nmap = shared_neighbor_map(&sets, cfg)?;
    let plan = resolve_plan(&sets, cfg);
    let ds = assemble_dataset(&sets, &nmap, &plan)?;
    progress(&format!(
        "variant {} channel {} subjects {:?}: {} train / {} val windows",
        cfg.variant,
        plan.channel,
        plan.train_subjects,
        ds.train.len(),
        ds.val.len()
    ));
    let outcome = train_channel_with(&ds, &plan, cfg.model_config(cfg.variant), |e| {
        progress(&format!("epoch {:>3} train {:.5} val {:.5} ({:.1}s)", e.epoch, e.train.total, e.val.total, e.wall_time_s))
    })?;
    std::fs::create_dir_all(out)?;
    let checkpoint = out.join("model.ckpt");
    outcome.model.save(&checkpoint)?;
    outcome.trace.write_csv(out.join("train_log.csv"))?;
    std::fs::write(out.join("trace.json"), serde_json::to_string_pretty(&outcome.trace)?)?;
    let effective = RunConfig { train: plan, ..cfg.clone() };
    std::fs::write(out.join("run.json"), effective.to_json())?;
    Ok(TrainSummary { checkpoint, param_count: outcome.model.param_count(), trace: outcome.trace })
}

/// Reconstructs `channel` of every window with the checkpoint (or, with
/// `identity`, uses the originals as their own reconstruction) and writes
/// `metrics.csv` and `report.json`.
pub fn cmd_evaluate(checkpoint: Option<&Path>, dir: &Path, channel: &str, cfg: &RunConfig, out: &Path) -> Result<MetricReport> {
    let ws = WindowSet::load(dir)?;
    let target = ws.channel_index(channel)?;
    let (recons, variant) = match checkpoint {
        Some(path) => {
            let mut model = Model::load(path)?;
            let nmap = neighbor_map_for(&ws, &montage_for(cfg)?, cfg.neighbor_threshold)?;
            (reconstruct_set(&mut model, &ws, target, &nmap, cfg.train.batch)?, model.variant().to_string())
        }
        None => {
            let own: Vec<Option<Vec<f64>>> = (0..ws.len()).map(|b| Some(ws.channel(b, target).to_vec())).collect();
            (own, "identity".to_string())
        }
    };
    let report = evaluate_windowset(&ws, target, &recons)?.with_variant(variant);
    report.save(out)?;
    Ok(report)
}

pub struct AblationSummary {
    pub report: AblationReport,
    /// `(variant, seed, params, best epoch, best validation total)`.
    pub runs: Vec<(Variant, u64, usize, usize, f64)>,
}

/// Trains every configured variant for every seed on the non-held-out
/// subjects, evaluates the first seed of each on the held-out subject and
/// writes the comparison tables, per-run logs and a tidy loss-curve CSV.
pub fn cmd_ablate(dirs: &[PathBuf], cfg: &RunConfig, out: &Path, workers: usize) -> Result<AblationSummary> {
    let sets = load_window_sets(dirs)?;
    let held = cfg
        .train
        .held_out_subject
        .clone()
        .ok_or_else(|| Error::Config("ablation needs train.held_out_subject".into()))?;
    let eval_set = sets
        .iter()
        .find(|s| subject_of(s) == Some(held.as_str()))
        .ok_or_else(|| Error::InvalidArgument(format!("no window set for held-out subject {held}")))?;
    let nmap = shared_neighbor_map(&sets, cfg)?;
    let plan = resolve_plan(&sets, cfg);
    let jobs: Vec<GridJob> = cfg
        .ablation
        .variants
        .iter()
        .flat_map(|&v| cfg.ablation.seeds.iter().map(move |&seed| (v, seed)))
        .map(|(v, seed)| GridJob { config: cfg.model_config(v), seed })
        .collect();
    let runs = train_grid(&sets, &nmap, &plan, &jobs, workers)?;
    std::fs::create_dir_all(out)?;
    let target = eval_set.channel_index(&plan.channel)?;
    let mut curves = String::from("variant,seed,epoch,train_total,val_total\n");
    let mut table = String::from("variant,seed,params,best_epoch,best_val_total,stop\n");
    let mut summary = Vec::new();
    let mut reports: Vec<(String, MetricReport)> = Vec::new();
    let mut counts = Vec::new();
    for mut run in runs {
        let v = run.job.config.variant;
        let seed = run.job.seed;
        let dir = out.join(format!("{v}_seed{seed}"));
        std::fs::create_dir_all(&dir)?;
        run.outcome.model.save(dir.join("model.ckpt"))?;
        run.outcome.trace.write_csv(dir.join("train_log.csv"))?;
        let t = &run.outcome.trace;
        for e in &t.epochs {
            curves.push_str(&format!("{v},{seed},{},{},{}\n", e.epoch, e.train.total, e.val.total));
        }
        let params = run.outcome.model.param_count();
        table.push_str(&format!("{v},{seed},{params},{},{},{}\n", t.best_epoch, t.best_val, t.stop));
        summary.push((v, seed, params, t.best_epoch, t.best_val));
        if seed == cfg.ablation.seeds[0] {
            let recons = reconstruct_set(&mut run.outcome.model, eval_set, target, &nmap, plan.batch)?;
            let rep = evaluate_windowset(eval_set, target, &recons)?.with_variant(v.to_string());
            rep.save(&dir)?;
            reports.push((v.to_string(), rep));
            counts.push(Some(params));
        }
    }
    std::fs::write(out.join("loss_curves.csv"), curves)?;
    std::fs::write(out.join("runs.csv"), table)?;
    let named: Vec<(String, &MetricReport)> = reports.iter().map(|(n, r)| (n.clone(), r)).collect();
    let report = ablation_report(&named, &counts)?;
    report.save(out)?;
    Ok(AblationSummary { report, runs: summary })
}

/// Window counts per label, as recorded in a manifest.
pub fn label_counts(ws: &WindowSet) -> (usize, usize) {
    let clean = ws.labels.iter().filter(|l| **l == WindowLabel::Clean).count();
    (clean, ws.len() - clean)
}
