//! The JSON run configuration shared by all subcommands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::eegdata::{SyntheticSpec, DEFAULT_NEIGHBOR_THRESHOLD};
use crate::error::{Error, Result};
use crate::preprocess::PreprocessConfig;
use crate::rexfernet::{ModelConfig, Variant};
use crate::trainer::TrainPlan;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self { variants: Variant::ALL.to_vec(), seeds: vec![0] }
    }
}

/// Everything a run needs besides input paths given on the command line.
/// Unknown keys are rejected; missing keys take their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub variant: Variant,
    /// Full model override; the full-size configuration when absent.
    pub model: Option<ModelConfig>,
    pub train: TrainPlan,
    pub preprocess: PreprocessConfig,
    /// Montage CSV; the bundled 28-channel montage when absent.
    pub montage: Option<PathBuf>,
    pub neighbor_threshold: f64,
    pub synthetic: SyntheticSpec,
    pub ablation: AblationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            variant: Variant::D,
            model: None,
            train: TrainPlan::default(),
            preprocess: PreprocessConfig::default(),
            montage: None,
            neighbor_threshold: DEFAULT_NEIGHBOR_THRESHOLD,
            synthetic: SyntheticSpec::default(),
            ablation: AblationConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run config serializes")
    }

    /// Structural checks that do not depend on data.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if let Some(m) = &self.model {
            m.validate()?;
        }
        if !(self.neighbor_threshold > 0.0) {
            return Err(Error::Config("neighbor_threshold must be positive".into()));
        }
        self.synthetic.validate()?;
        let p = &self.preprocess;
        if !(p.window_s > 0.0 && p.stride_s > 0.0 && p.clean_z > 0.0) {
            return Err(Error::Config("preprocess window, stride and clean_z must be positive".into()));
        }
        if self.ablation.variants.is_empty() || self.ablation.seeds.is_empty() {
            return Err(Error::Config("ablation needs at least one variant and one seed".into()));
        }
        let t = &self.train;
        if !(t.val_fraction > 0.0 && t.val_fraction < 1.0) || t.batch == 0 || t.max_epochs == 0 || t.window_step == 0 {
            return Err(Error::Config("train plan: bad val_fraction, batch, max_epochs or window_step".into()));
        }
        Ok(())
    }

    pub fn model_config(&self, variant: Variant) -> ModelConfig {
        match &self.model {
            Some(m) => ModelConfig { variant, ..m.clone() },
            None => ModelConfig::paper(variant),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
        assert_eq!(RunConfig::from_json("{}").unwrap(), c);
    }

    #[test]
    fn rejects_unknown_keys_and_versions() {
        assert!(matches!(RunConfig::from_json(r#"{"bogus": 1}"#), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_json(r#"{"train": {"lr": 0.1, "lrr": 2}}"#), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_json(r#"{"schema_version": 2}"#), Err(Error::Config(_))));
        assert!(RunConfig::from_json(r#"{"train": {"val_fraction": 1.0}}"#).is_err());
        assert_eq!(RunConfig::from_json(r#"{"variant": "B"}"#).unwrap().variant, Variant::B);
    }
}
