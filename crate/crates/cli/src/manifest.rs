//! Sample manifests: `{"schema_version": 1, "samples": [...]}` with paths
//! relative to the manifest's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mer_core::instruct::SampleRecord;
use serde::{Deserialize, Serialize};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub samples: Vec<SampleRecord>,
}

/// A parsed manifest together with the directory its paths resolve against.
#[derive(Debug, Clone)]
pub struct LoadedManifest {
    pub path: PathBuf,
    pub base_dir: PathBuf,
    pub samples: Vec<SampleRecord>,
}

/// File-name-safe form of a sample id: anything outside `[A-Za-z0-9._-]`
/// becomes `_`.
pub fn sanitize_id(id: &str) -> String {
    let s: String = id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.starts_with('.') {
        format!("_{s}")
    } else {
        s
    }
}

#[derive(Debug, Clone, Default)]
pub struct SourceFilter {
    pub only: Vec<String>,
    pub exclude: Vec<String>,
}

impl SourceFilter {
    pub fn keeps(&self, source: &str) -> bool {
        (self.only.is_empty() || self.only.iter().any(|s| s == source))
            && !self.exclude.iter().any(|s| s == source)
    }
}

pub fn parse_manifest(text: &str) -> Result<Manifest> {
    let m: Manifest = serde_json::from_str(text)?;
    if m.schema_version != MANIFEST_SCHEMA_VERSION {
        bail!("unsupported manifest schema_version {}", m.schema_version);
    }
    let mut seen: BTreeMap<String, &str> = BTreeMap::new();
    for s in &m.samples {
        if let Some(prev) = seen.insert(sanitize_id(&s.id), &s.id) {
            if prev == s.id {
                bail!("duplicate sample id {:?}", s.id);
            }
            bail!(
                "sample ids {:?} and {:?} map to the same output file",
                prev,
                s.id
            );
        }
    }
    Ok(m)
}

impl LoadedManifest {
    pub fn load(path: &Path, filter: &SourceFilter) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        let m = parse_manifest(&text)
            .with_context(|| format!("parsing manifest {}", path.display()))?;
        let mut samples: Vec<SampleRecord> = m
            .samples
            .into_iter()
            .filter(|s| filter.keeps(&s.source_dataset))
            .collect();
        samples.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(Self {
            path: path.to_path_buf(),
            base_dir: path.parent().unwrap_or(Path::new(".")).to_path_buf(),
            samples,
        })
    }

    pub fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}
