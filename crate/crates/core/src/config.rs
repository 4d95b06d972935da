//! Run configuration: one TOML file covering every stage of the pipeline.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::LogRegConfig;
use crate::geometry::{GeometryConfig, GeometryError};
use crate::kpi::DEFAULT_MIN_PASSES;
use crate::mpnn::{MpnnConfig, MpnnError};
use crate::pitch::{PitchError, PitchSpec};
use crate::synth::{GeneratorConfig, GeneratorError};
use crate::train::{SearchSpace, TrainConfig, TrainError};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("config key `{key}` invalid: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NearestConfig {
    /// Softmax temperature in meters.
    pub tau: f64,
}

impl Default for NearestConfig {
    fn default() -> Self {
        Self { tau: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    pub samples: usize,
    pub warmup: usize,
    /// Per-frame budget in seconds (25 Hz).
    pub budget_seconds: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            samples: 1000,
            warmup: 50,
            budget_seconds: 0.040,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportConfig {
    /// Rows in the Top-k side table of each review.
    pub top_k: usize,
    /// Minimum p(Top-1) − p(chosen) for a failed pass to be flagged.
    pub gap_threshold: f64,
    pub min_passes: usize,
    /// Outlier cut on |z| within role.
    pub z_threshold: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            top_k: 5,
            gap_threshold: 0.25,
            min_passes: DEFAULT_MIN_PASSES,
            z_threshold: 2.0,
        }
    }
}

/// Input locations. Commands that produce these artifacts ignore them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    /// Snapshot file; when absent the generator runs in memory.
    pub snapshots: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub logreg_model: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub pitch: PitchSpec,
    pub geometry: GeometryConfig,
    pub model: MpnnConfig,
    pub training: TrainConfig,
    pub generator: GeneratorConfig,
    pub search: SearchSpace,
    pub logreg: LogRegConfig,
    pub nearest: NearestConfig,
    pub bench: BenchConfig,
    pub report: ReportConfig,
    pub paths: PathsConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Applies `--seed`: every RNG consumer derives from it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.generator.seed = seed;
        self.model.seed = seed;
        self.training.seed = seed;
        self.search.seed = seed;
        self
    }

    /// First 12 hex digits of the SHA-256 of the resolved TOML.
    pub fn hash(&self) -> String {
        let d = Sha256::digest(self.to_toml_string().as_bytes());
        hex::encode(&d[..6])
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.pitch.validate().map_err(|e| match e {
            PitchError::InvalidDimension(k, v) => {
                invalid(format!("pitch.{k}"), format!("value {v}"))
            }
        })?;
        self.geometry.validate().map_err(|e| match e {
            GeometryError::InvalidConfig(k, v) => {
                invalid(format!("geometry.{k}"), format!("value {v}"))
            }
            other => invalid("geometry", other.to_string()),
        })?;
        self.model.validate().map_err(|e| match e {
            MpnnError::InvalidConfig(k, why) => invalid(format!("model.{k}"), why),
            other => invalid("model", other.to_string()),
        })?;
        self.training.validate().map_err(|e| match e {
            TrainError::InvalidConfig(k, why) => invalid(format!("training.{k}"), why),
            other => invalid("training", other.to_string()),
        })?;
        self.search.validate().map_err(|e| match e {
            TrainError::InvalidConfig(k, why) => invalid(k, why),
            other => invalid("search", other.to_string()),
        })?;
        self.generator.validate().map_err(|e| match e {
            GeneratorError::InvalidConfig(k, why) => invalid(format!("generator.{k}"), why),
        })?;
        if !(self.logreg.learning_rate > 0.0) {
            return Err(invalid("logreg.learning_rate", "must be positive"));
        }
        if !(self.nearest.tau > 0.0 && self.nearest.tau.is_finite()) {
            return Err(invalid("nearest.tau", "must be positive"));
        }
        if self.bench.samples == 0 {
            return Err(invalid("bench.samples", "must be ≥ 1"));
        }
        if !(self.bench.budget_seconds > 0.0) {
            return Err(invalid("bench.budget_seconds", "must be positive"));
        }
        if self.report.top_k == 0 {
            return Err(invalid("report.top_k", "must be ≥ 1"));
        }
        if !(0.0..=1.0).contains(&self.report.gap_threshold) {
            return Err(invalid("report.gap_threshold", "must lie in [0, 1]"));
        }
        if !(self.report.z_threshold > 0.0) {
            return Err(invalid("report.z_threshold", "must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_through_toml() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml_string();
        assert_eq!(RunConfig::from_toml_str(&text, "inline").unwrap(), cfg);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg = RunConfig::from_toml_str("[model]\nhidden_dim = 16\n", "inline").unwrap();
        assert_eq!(cfg.model.hidden_dim, 16);
        assert_eq!(cfg.report.gap_threshold, 0.25);
    }

    #[test]
    fn unknown_key_rejected() {
        let e =
            RunConfig::from_toml_str("[training]\nlearnin_rate = 0.1\n", "run.toml").unwrap_err();
        let msg = e.to_string();
        assert!(
            msg.contains("learnin_rate") && msg.contains("run.toml"),
            "{msg}"
        );
    }

    #[test]
    fn validation_names_key_path() {
        let e = RunConfig::from_toml_str("[model]\nhidden_dim = 0\n", "x").unwrap_err();
        assert!(
            matches!(e, ConfigError::Invalid { ref key, .. } if key == "model.hidden_dim"),
            "{e}"
        );
        let e = RunConfig::from_toml_str("[search]\ntrials = 0\n", "x").unwrap_err();
        assert!(
            matches!(e, ConfigError::Invalid { ref key, .. } if key == "search.trials"),
            "{e}"
        );
        let e = RunConfig::from_toml_str("[geometry]\ncone_width = 4.0\n", "x").unwrap_err();
        assert!(
            matches!(e, ConfigError::Invalid { ref key, .. } if key == "geometry.cone_width"),
            "{e}"
        );
    }

    #[test]
    fn seed_override_changes_hash() {
        let a = RunConfig::default();
        let b = a.clone().with_seed(99);
        assert_eq!(b.training.seed, 99);
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), RunConfig::default().hash());
    }
}
