//! Pipeline configuration in TOML. Every tunable has a default; the
//! canonical serialization (fixed key order) is hashed into run manifests.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mer_core::compensation::CompensationParams;
use mer_core::evidence::EvidenceParams;
use mer_core::flow::FlowEstimatorParams;
use mer_core::IntensityBand;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const CONFIG_ENV: &str = "MER_CONFIG";
pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineOptions {
    /// Measure evidence after gamma correction.
    pub evidence_after_gamma: bool,
    /// Lowest band reported as unexplained motion.
    pub backward_band: IntensityBand,
    /// Estimate flow between the frame before apex and apex instead of
    /// onset and apex.
    pub consecutive_frames: bool,
    /// Write an HSV rendering per sample next to the records.
    pub write_visualizations: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            evidence_after_gamma: true,
            backward_band: IntensityBand::Strong,
            consecutive_frames: false,
            write_visualizations: false,
        }
    }
}

/// Optional overrides for the built-in rule tables. Relative paths resolve
/// against the config file's directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TablePaths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub taxonomy: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expectations: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prototypes: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instruction_pools: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptOptions {
    /// Seed for instruction-pool selection.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: u32,
    pub parallel: usize,
    pub compensation: CompensationParams,
    pub evidence: EvidenceParams,
    pub estimator: FlowEstimatorParams,
    pub pipeline: PipelineOptions,
    pub prompts: PromptOptions,
    pub tables: TablePaths,
    /// Directory of the file the config came from.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            parallel: 1,
            compensation: CompensationParams::default(),
            evidence: EvidenceParams::default(),
            estimator: FlowEstimatorParams::default(),
            pipeline: PipelineOptions::default(),
            prompts: PromptOptions::default(),
            tables: TablePaths::default(),
            base_dir: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            bail!("unsupported config schema_version {}", self.schema_version);
        }
        if self.parallel == 0 {
            bail!("parallel must be >= 1");
        }
        self.compensation.validate()?;
        self.evidence.validate()?;
        self.estimator.validate()?;
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg =
            Self::from_toml(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.base_dir = Some(path.parent().unwrap_or(Path::new(".")).to_path_buf());
        Ok(cfg)
    }

    /// A table path resolved against the config file's directory.
    pub fn resolve_table(&self, p: &Option<PathBuf>) -> Option<PathBuf> {
        let p = p.as_ref()?;
        Some(match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.clone(),
        })
    }

    /// Explicit path, else the `MER_CONFIG` path, else defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn to_canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hash of the canonical form, excluding `parallel`, which never
    /// affects outputs.
    pub fn sha256(&self) -> String {
        let mut c = self.clone();
        c.parallel = 1;
        hex::encode(Sha256::digest(c.to_canonical_toml().as_bytes()))
    }
}
