//! Manifest-driven annotation runs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use mer_core::evidence::EvidenceSet;
use mer_core::flow::estimate_flow;
use mer_core::instruct::{
    apply_taxonomy, render_prompt, InstructionTriple, PromptTarget, SampleRecord, Task, TaxonomyLog,
};
use mer_core::pipeline::{annotate, PipelineSettings};
use mer_core::rationale::{Outcome, Rationale, VerificationReport};
use mer_core::viz::{flow_to_image, HsvConvention};
use mer_core::{Emotion, FlowField};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::flo::read_flow_file;
use crate::io::{encode_rgb_png, read_gray, read_landmarks};
use crate::manifest::{sanitize_id, LoadedManifest};
use crate::tables::Tables;

pub const RECORD_SCHEMA_VERSION: u32 = 1;
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;
pub const RUN_MANIFEST_SCHEMA_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(
        &fs::read(path).with_context(|| format!("reading {}", path.display()))?,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct PromptRecord {
    pub pool_index: usize,
    pub input: String,
    pub target: PromptTarget,
}

#[derive(Debug, Clone, Serialize)]
pub struct Details {
    pub rationale_sections: Rationale,
    pub measurements: EvidenceSet,
    pub taxonomy: TaxonomyLog,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    /// "file" or "estimated".
    pub flow_source: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame_pair: Option<(usize, usize)>,
    /// Manifest-relative input path to sha256.
    pub inputs: BTreeMap<String, String>,
}

/// One emitted training record.
#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub schema_version: u32,
    pub id: String,
    pub source_dataset: String,
    #[serde(flatten)]
    pub triple: InstructionTriple,
    pub details: Details,
    pub verification: VerificationReport,
    pub prompts: BTreeMap<Task, PromptRecord>,
    pub provenance: Provenance,
}

struct RawFlow {
    field: FlowField,
    source: &'static str,
    frame_pair: Option<(usize, usize)>,
}

/// Loads or estimates the raw flow for a sample.
fn sample_flow(
    record: &SampleRecord,
    manifest: &LoadedManifest,
    cfg: &PipelineConfig,
    inputs: &mut BTreeMap<String, String>,
) -> Result<RawFlow> {
    if let Some(p) = &record.flow_path {
        let path = manifest.resolve(p);
        inputs.insert(p.clone(), sha256_file(&path)?);
        let field =
            read_flow_file(&path).with_context(|| format!("reading flow {}", path.display()))?;
        return Ok(RawFlow {
            field,
            source: "file",
            frame_pair: None,
        });
    }
    let frames = record
        .frames
        .as_ref()
        .ok_or_else(|| anyhow!("no flow source"))?;
    let (a, b) = record.frame_pair(cfg.pipeline.consecutive_frames)?;
    let mut load = |i: usize| -> Result<_> {
        let path = manifest.resolve(&frames[i]);
        inputs.insert(frames[i].clone(), sha256_file(&path)?);
        read_gray(&path)
    };
    let (fa, fb) = (load(a)?, load(b)?);
    Ok(RawFlow {
        field: estimate_flow(&fa, &fb, &cfg.estimator)?,
        source: "estimated",
        frame_pair: Some((a, b)),
    })
}

fn settings(cfg: &PipelineConfig) -> PipelineSettings {
    PipelineSettings {
        compensation: cfg.compensation.clone(),
        evidence: cfg.evidence.clone(),
        evidence_after_gamma: cfg.pipeline.evidence_after_gamma,
        backward_band: cfg.pipeline.backward_band,
    }
}

/// Runs the full pipeline for one sample. The visual field is returned for
/// optional rendering.
pub fn process_sample(
    raw_record: &SampleRecord,
    manifest: &LoadedManifest,
    cfg: &PipelineConfig,
    tables: &Tables,
) -> Result<(OutputRecord, FlowField)> {
    raw_record.validate()?;
    let (record, log) = apply_taxonomy(raw_record, &tables.taxonomy);
    let emotion = tables.taxonomy.map_emotion(&raw_record.gt_emotion);
    let mut inputs = BTreeMap::new();
    let RawFlow {
        field: raw,
        source: flow_source,
        frame_pair,
    } = sample_flow(&record, manifest, cfg, &mut inputs)?;
    let lm_path = manifest.resolve(&record.landmarks_path);
    inputs.insert(record.landmarks_path.clone(), sha256_file(&lm_path)?);
    let landmarks = read_landmarks(
        &lm_path,
        (raw.width() as u32, raw.height() as u32),
        record.landmarks_normalized,
    )?;
    let ann = annotate(
        &raw,
        &landmarks,
        &record.gt_aus,
        emotion,
        &settings(cfg),
        &tables.kb,
    )?;
    let prompts = [Task::Emotion, Task::Flow]
        .into_iter()
        .map(|task| {
            let b = render_prompt(
                &ann.triple,
                task,
                cfg.prompts.seed,
                &record.id,
                &tables.pools,
            );
            (
                task,
                PromptRecord {
                    pool_index: b.pool_index,
                    input: b.input_text(),
                    target: b.target,
                },
            )
        })
        .collect();
    let out = OutputRecord {
        schema_version: RECORD_SCHEMA_VERSION,
        id: record.id.clone(),
        source_dataset: record.source_dataset.clone(),
        triple: ann.triple,
        details: Details {
            rationale_sections: ann.rationale,
            measurements: ann.evidence,
            taxonomy: log,
        },
        verification: ann.report,
        prompts,
        provenance: Provenance {
            flow_source,
            frame_pair,
            inputs,
        },
    };
    Ok((out, ann.visual))
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub total: usize,
    pub succeeded: usize,
    pub failed: Vec<Failure>,
    pub emotions: BTreeMap<Emotion, usize>,
    /// AU to forward-verification outcome counts.
    pub forward_outcomes: BTreeMap<String, BTreeMap<Outcome, usize>>,
    pub anomalies: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub config_sha256: String,
    pub config: String,
    /// Input path (manifest-relative, or as given) to sha256.
    pub inputs: BTreeMap<String, String>,
    /// Output path relative to the output directory to sha256.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub summary: Summary,
    pub out_dir: PathBuf,
}

impl BatchOutcome {
    pub fn all_ok(&self) -> bool {
        self.summary.failed.is_empty()
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v)?;
    s.push(b'\n');
    Ok(s)
}

/// Processes every sample with `cfg.parallel` workers, then writes records,
/// optional renderings, `summary.json` and `run_manifest.json`. Outputs
/// depend only on inputs and config, never on worker count or timing.
pub fn run_batch(
    manifest: &LoadedManifest,
    cfg: &PipelineConfig,
    tables: &Tables,
    out_dir: &Path,
) -> Result<BatchOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallel)
        .build()?;
    let results: Vec<Result<(OutputRecord, FlowField)>> = pool.install(|| {
        manifest
            .samples
            .par_iter()
            .map(|s| process_sample(s, manifest, cfg, tables))
            .collect()
    });

    fs::create_dir_all(out_dir.join("records"))
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let mut outputs = BTreeMap::new();
    let mut inputs = BTreeMap::new();
    let mut write = |rel: String, bytes: &[u8]| -> Result<()> {
        let path = out_dir.join(&rel);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        outputs.insert(rel, sha256_hex(bytes));
        Ok(())
    };
    let conv = HsvConvention::default();
    let mut summary = Summary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        total: manifest.samples.len(),
        succeeded: 0,
        failed: Vec::new(),
        emotions: BTreeMap::new(),
        forward_outcomes: BTreeMap::new(),
        anomalies: 0,
    };
    for (sample, result) in manifest.samples.iter().zip(results) {
        match result {
            Ok((rec, visual)) => {
                summary.succeeded += 1;
                *summary
                    .emotions
                    .entry(rec.triple.category.emotion)
                    .or_default() += 1;
                for (au, entry) in &rec.verification.forward {
                    *summary
                        .forward_outcomes
                        .entry(au.to_string())
                        .or_default()
                        .entry(entry.outcome)
                        .or_default() += 1;
                }
                summary.anomalies += rec.verification.anomalies.len();
                inputs.extend(
                    rec.provenance
                        .inputs
                        .iter()
                        .map(|(k, v)| (k.clone(), v.clone())),
                );
                let name = sanitize_id(&rec.id);
                write(format!("records/{name}.json"), &to_json(&rec)?)?;
                if cfg.pipeline.write_visualizations {
                    fs::create_dir_all(out_dir.join("viz"))?;
                    write(
                        format!("viz/{name}.png"),
                        &encode_rgb_png(&flow_to_image(&visual, &conv))?,
                    )?;
                }
            }
            Err(e) => summary.failed.push(Failure {
                id: sample.id.clone(),
                error: format!("{e:#}"),
            }),
        }
    }
    write("summary.json".into(), &to_json(&summary)?)?;

    let manifest_name = manifest
        .path
        .file_name()
        .map_or("manifest".into(), |n| n.to_string_lossy().into_owned());
    inputs.insert(manifest_name, sha256_file(&manifest.path)?);
    for p in &tables.sources {
        inputs.insert(p.display().to_string(), sha256_file(p)?);
    }
    let mut canonical = cfg.clone();
    canonical.parallel = 1;
    let run = RunManifest {
        schema_version: RUN_MANIFEST_SCHEMA_VERSION,
        tool: env!("CARGO_PKG_NAME").into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: cfg.sha256(),
        config: canonical.to_canonical_toml(),
        inputs,
        outputs,
    };
    fs::write(out_dir.join("run_manifest.json"), to_json(&run)?)?;
    Ok(BatchOutcome {
        summary,
        out_dir: out_dir.to_path_buf(),
    })
}
