//! Batch command-line front end: `synth`, `preprocess`, `train`,
//! `evaluate` and `ablate`. Exit codes: 0 success, 1 usage or
//! configuration error, 2 data error, 3 numeric failure.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{
    cmd_ablate, cmd_evaluate, cmd_preprocess, cmd_synth, cmd_train, exit_code, label_counts, load_window_sets,
    montage_for, resolve_plan, AblationSummary, TrainSummary,
};
pub use config::{AblationConfig, RunConfig, SCHEMA_VERSION};

use crate::eegdata::SyntheticSpec;
use crate::error::{Error, Result};
use crate::rexfernet::Variant;
use crate::trainer::workers_from_env;

#[derive(Parser, Debug)]
#[command(name = "rexfer", version, about = "Neighbourhood-driven EEG channel reconstruction")]
pub struct Cli {
    /// Run configuration (JSON); defaults apply to missing keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Model variant, overriding the configuration.
    #[arg(long, global = true)]
    pub variant: Option<Variant>,
    /// Seed, overriding the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file or directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic recording (CSV) or a benchmark cohort.
    Synth {
        /// Synthetic spec (JSON); the configuration's `synthetic` block otherwise.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Write an N-subject benchmark cohort into the output directory.
        #[arg(long)]
        cohort: Option<usize>,
    },
    /// Filter, segment and label a recording into a window-set directory.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
    },
    /// Train one model on window sets.
    Train {
        #[arg(long = "windows", required = true, num_args = 1..)]
        windows: Vec<PathBuf>,
    },
    /// Reconstruct and score one window set.
    Evaluate {
        #[arg(long, required_unless_present = "identity")]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        windows: PathBuf,
        /// Target channel; the configuration's `train.channel` otherwise.
        #[arg(long)]
        channel: Option<String>,
        /// Score the originals against themselves (sanity check).
        #[arg(long)]
        identity: bool,
    },
    /// Train and compare all configured variants.
    Ablate {
        #[arg(long = "windows", required = true, num_args = 1..)]
        windows: Vec<PathBuf>,
    },
}

fn out_path(cli: &Cli) -> Result<PathBuf> {
    cli.out.clone().ok_or_else(|| Error::Config("--out is required".into()))
}

fn execute(cli: &Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = cli.variant {
        cfg.variant = v;
    }
    if let Some(s) = cli.seed {
        cfg.train.seed = s;
        cfg.synthetic.seed = s;
    }
    let out = out_path(cli)?;
    match &cli.command {
        Command::Synth { spec, cohort } => {
            let spec = match spec {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                    let mut s: SyntheticSpec = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
                    if let Some(seed) = cli.seed {
                        s.seed = seed;
                    }
                    s
                }
                None => cfg.synthetic.clone(),
            };
            for line in cmd_synth(&spec, *cohort, &out)? {
                println!("{line}");
            }
        }
        Command::Preprocess { input } => {
            let ws = cmd_preprocess(input, &out, &cfg)?;
            let (clean, noisy) = label_counts(&ws);
            println!("{} windows ({clean} clean, {noisy} noisy) -> {}", ws.len(), out.display());
        }
        Command::Train { windows } => {
            let s = cmd_train(windows, &cfg, &out, |m| eprintln!("{m}"))?;
            println!(
                "best epoch {} val {:.5} ({}), {} parameters -> {}",
                s.trace.best_epoch,
                s.trace.best_val,
                s.trace.stop,
                s.param_count,
                s.checkpoint.display()
            );
        }
        Command::Evaluate { checkpoint, windows, channel, identity } => {
            let channel = channel.clone().unwrap_or_else(|| cfg.train.channel.clone());
            let ckpt = if *identity { None } else { checkpoint.as_deref() };
            let r = cmd_evaluate(ckpt, windows, &channel, &cfg, &out)?;
            for (name, section) in [("clean", &r.clean), ("noisy", &r.noisy)] {
                println!("{name}: {} windows", section.windows);
                for (m, v) in r.metrics.iter().zip(&section.means) {
                    if let Some(v) = v {
                        println!("  {m:<24} {v:.6}");
                    }
                }
            }
        }
        Command::Ablate { windows } => {
            let s = cmd_ablate(windows, &cfg, &out, workers_from_env())?;
            for (v, seed, params, epoch, val) in &s.runs {
                println!("{v} seed {seed}: {params} params, best epoch {epoch}, val {val:.5}");
            }
            print!("{}", s.report.to_csv());
        }
    }
    Ok(())
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
