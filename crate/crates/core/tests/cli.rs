//! End-to-end runs of the command-line front end on a temporary directory.

use std::path::Path;

use rexfer::cli::run;
use rexfer::preprocess::{Manifest, WindowSet};

fn rexfer(args: &[&str]) -> i32 {
    run(std::iter::once("rexfer").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_preprocess_train_evaluate() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let (raw, raw2) = (root.join("raw"), root.join("raw2"));
    assert_eq!(rexfer(&["synth", "--cohort", "3", "--seed", "5", "--out", s(&raw)]), 0);
    assert_eq!(rexfer(&["synth", "--cohort", "3", "--seed", "5", "--out", s(&raw2)]), 0);
    for sub in ["sub01", "sub02", "sub03"] {
        let a = std::fs::read(raw.join(format!("{sub}.csv"))).unwrap();
        let b = std::fs::read(raw2.join(format!("{sub}.csv"))).unwrap();
        assert_eq!(a, b, "{sub} differs between identical seeds");
    }

    let cfg = root.join("run.json");
    std::fs::write(&cfg, r#"{"train": {"max_epochs": 2, "window_step": 4, "batch": 32}}"#).unwrap();
    let mut windows = Vec::new();
    for sub in ["sub01", "sub02", "sub03"] {
        let out = root.join("windows").join(sub);
        let input = raw.join(format!("{sub}.csv"));
        assert_eq!(rexfer(&["preprocess", "--config", s(&cfg), "--input", s(&input), "--out", s(&out)]), 0);
        let ws = WindowSet::load(&out).unwrap();
        // 60 s at 100 Hz, 256-sample windows every 10 samples
        assert_eq!(ws.len(), 575);
        let m: Manifest = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m.n_clean + m.n_noisy, 575);
        windows.push(out);
    }

    let model = root.join("model");
    let mut args = vec!["train", "--config", s(&cfg), "--variant", "C", "--out", s(&model), "--windows"];
    args.extend(windows.iter().map(|w| s(w)));
    assert_eq!(rexfer(&args), 0);
    for f in ["model.ckpt", "train_log.csv", "trace.json", "run.json"] {
        assert!(model.join(f).exists(), "missing {f}");
    }
    let log = std::fs::read_to_string(model.join("train_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 3);
    assert!(log.starts_with("epoch,train_total,"));

    let ckpt = model.join("model.ckpt");
    let eval = root.join("eval");
    assert_eq!(rexfer(&["evaluate", "--checkpoint", s(&ckpt), "--windows", s(&windows[0]), "--out", s(&eval)]), 0);
    let csv = std::fs::read_to_string(eval.join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 576);

    let ident = root.join("ident");
    assert_eq!(rexfer(&["evaluate", "--identity", "--windows", s(&windows[0]), "--out", s(&ident)]), 0);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(ident.join("report.json")).unwrap()).unwrap();
    let names = report["metrics"].as_array().unwrap();
    let means = report["clean"]["means"].as_array().unwrap();
    for (name, v) in names.iter().zip(means) {
        // metrics that only apply to noisy windows are null here
        let (name, Some(v)) = (name.as_str().unwrap(), v.as_f64()) else { continue };
        let expect = if name == "psd_pearson" || name == "rv" { 1.0 } else { 0.0 };
        assert!((v - expect).abs() < 1e-9, "{name} = {v}");
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    assert_eq!(rexfer(&["synth"]), 1, "missing --out");
    assert_eq!(rexfer(&["frobnicate"]), 1);
    assert_eq!(rexfer(&["--help"]), 0);

    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"train": {"epochs": 3}}"#).unwrap();
    assert_eq!(rexfer(&["synth", "--config", s(&bad), "--out", s(&out)]), 1, "unknown key");

    let missing = tmp.path().join("none.csv");
    assert_eq!(rexfer(&["preprocess", "--input", s(&missing), "--out", s(&out)]), 2);
}
