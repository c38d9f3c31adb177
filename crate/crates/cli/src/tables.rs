//! Rule tables and instruction pools: built-in defaults or JSON overrides.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mer_core::instruct::{builtin_pools, builtin_taxonomy, InstructionPools, Taxonomy};
use mer_core::pipeline::KnowledgeBase;
use mer_core::rationale::{
    builtin_expectations, builtin_prototypes, EmotionPrototype, ExpectationTable,
};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::PipelineConfig;

pub const EXPECTATIONS_FILE: &str = "expectations.json";
pub const PROTOTYPES_FILE: &str = "prototypes.json";
pub const TAXONOMY_FILE: &str = "taxonomy.json";
pub const POOLS_FILE: &str = "instruction_pools.json";

/// Everything a batch run needs besides per-sample inputs.
#[derive(Debug, Clone)]
pub struct Tables {
    pub kb: KnowledgeBase,
    pub taxonomy: Taxonomy,
    pub pools: InstructionPools,
    /// Override files that were read, for provenance.
    pub sources: Vec<PathBuf>,
}

fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn pick<T: DeserializeOwned>(
    path: Option<PathBuf>,
    builtin: fn() -> T,
    sources: &mut Vec<PathBuf>,
) -> Result<T> {
    match path {
        Some(p) => {
            let v = load_json(&p)?;
            sources.push(p);
            Ok(v)
        }
        None => Ok(builtin()),
    }
}

impl Tables {
    pub fn builtin() -> Self {
        Self {
            kb: KnowledgeBase::default(),
            taxonomy: builtin_taxonomy(),
            pools: builtin_pools(),
            sources: Vec::new(),
        }
    }

    pub fn load(cfg: &PipelineConfig) -> Result<Self> {
        let mut sources = Vec::new();
        let expectations: ExpectationTable = pick(
            cfg.resolve_table(&cfg.tables.expectations),
            builtin_expectations,
            &mut sources,
        )?;
        expectations.validate()?;
        let prototypes: Vec<EmotionPrototype> = pick(
            cfg.resolve_table(&cfg.tables.prototypes),
            builtin_prototypes,
            &mut sources,
        )?;
        if prototypes.iter().any(|p| p.au_pattern.is_empty()) {
            anyhow::bail!("prototype patterns must not be empty");
        }
        let taxonomy: Taxonomy = pick(
            cfg.resolve_table(&cfg.tables.taxonomy),
            builtin_taxonomy,
            &mut sources,
        )?;
        let pools: InstructionPools = pick(
            cfg.resolve_table(&cfg.tables.instruction_pools),
            builtin_pools,
            &mut sources,
        )?;
        pools.validate().map_err(anyhow::Error::msg)?;
        let kb = KnowledgeBase {
            expectations,
            prototypes,
            ..KnowledgeBase::default()
        };
        Ok(Self {
            kb,
            taxonomy,
            pools,
            sources,
        })
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("tables serialize") + "\n"
}

/// File name and contents of every built-in table, as shipped in `data/`.
pub fn builtin_table_files() -> Vec<(&'static str, String)> {
    vec![
        (EXPECTATIONS_FILE, pretty(&builtin_expectations())),
        (PROTOTYPES_FILE, pretty(&builtin_prototypes())),
        (TAXONOMY_FILE, pretty(&builtin_taxonomy())),
        (POOLS_FILE, pretty(&builtin_pools())),
    ]
}
