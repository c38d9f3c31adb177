//! Subcommand bodies. Each returns the process exit code on success paths
//! and an error for contract violations.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mer_core::compensation::{compensate, gamma_correct};
use mer_core::flow::estimate_flow;
use mer_core::geometry::{convex_hull, extract_rois};
use mer_core::instruct::{apply_taxonomy, dataset_stats};
use mer_core::viz::{flow_to_image, legend_image, HsvConvention};
use mer_core::Emotion;
use serde::Serialize;

use crate::batch::run_batch;
use crate::config::PipelineConfig;
use crate::eval::{evaluate, parse_predictions, EvalTask};
use crate::flo::{read_flow_file, write_flow_file};
use crate::io::{read_gray, read_landmarks, write_mask, write_rgb};
use crate::manifest::{LoadedManifest, SourceFilter};
use crate::tables::{builtin_table_files, Tables};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

/// Prints a machine-readable diagnostic record on stderr.
pub fn emit_diagnostic(level: &str, kind: &str, message: &str) {
    let rec = serde_json::json!({ "level": level, "kind": kind, "message": message });
    eprintln!("{rec}");
}

#[derive(Serialize)]
struct CoverageEntry {
    pixels: usize,
    bounding_box_fallback: bool,
}

/// Writes one PNG mask per region plus `coverage.json`.
pub fn cmd_regions(
    landmarks: &Path,
    dims: (u32, u32),
    normalized: bool,
    out: &Path,
) -> Result<i32> {
    let set = read_landmarks(landmarks, dims, normalized)?;
    let tables = Tables::builtin();
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let masks = extract_rois(&set, &tables.kb.catalog);
    let mut coverage = BTreeMap::new();
    for (name, mask) in &masks {
        if mask.bounding_box_fallback {
            let spec = tables.kb.catalog.region(name).expect("catalog region");
            let reason = match convex_hull(&spec.landmarks(&set)) {
                Ok(_) => "hull rasterized to no pixels".to_string(),
                Err(e) => e.to_string(),
            };
            emit_diagnostic(
                "warning",
                "bounding_box_fallback",
                &format!("{name}: {reason}"),
            );
        }
        write_mask(&out.join(format!("{name}.png")), mask)?;
        coverage.insert(
            name.clone(),
            CoverageEntry {
                pixels: mask.count(),
                bounding_box_fallback: mask.bounding_box_fallback,
            },
        );
    }
    fs::write(
        out.join("coverage.json"),
        serde_json::to_string_pretty(&coverage)? + "\n",
    )?;
    Ok(EXIT_OK)
}

pub enum FlowSource {
    Frames(PathBuf, PathBuf),
    File(PathBuf),
}

pub fn cmd_flow(source: &FlowSource, cfg: &PipelineConfig, out: &Path) -> Result<i32> {
    match source {
        FlowSource::File(p) => {
            let field = read_flow_file(p).with_context(|| format!("reading {}", p.display()))?;
            write_flow_file(out, &field)?;
        }
        FlowSource::Frames(a, b) => {
            let field = estimate_flow(&read_gray(a)?, &read_gray(b)?, &cfg.estimator)?;
            write_flow_file(out, &field)?;
        }
    }
    Ok(EXIT_OK)
}

/// Renders a flow file. With landmarks, the field is compensated and
/// gamma-corrected first, as in annotation.
pub fn cmd_viz(
    flow: &Path,
    landmarks: Option<(&Path, bool)>,
    cfg: &PipelineConfig,
    out: &Path,
) -> Result<i32> {
    let mut field = read_flow_file(flow).with_context(|| format!("reading {}", flow.display()))?;
    if let Some((lm, normalized)) = landmarks {
        let set = read_landmarks(
            lm,
            (field.width() as u32, field.height() as u32),
            normalized,
        )?;
        let comp = compensate(&field, &set, &cfg.compensation)?;
        field = gamma_correct(&comp, &cfg.compensation);
    }
    write_rgb(out, &flow_to_image(&field, &HsvConvention::default()))?;
    Ok(EXIT_OK)
}

pub fn cmd_legend(size: usize, out: &Path) -> Result<i32> {
    if size == 0 {
        bail!("legend size must be positive");
    }
    write_rgb(out, &legend_image(size, &HsvConvention::default()))?;
    Ok(EXIT_OK)
}

pub fn cmd_annotate(
    manifest: &Path,
    filter: &SourceFilter,
    cfg: &PipelineConfig,
    out: &Path,
) -> Result<i32> {
    let tables = Tables::load(cfg)?;
    let m = LoadedManifest::load(manifest, filter)?;
    let outcome = run_batch(&m, cfg, &tables, out)?;
    for f in &outcome.summary.failed {
        emit_diagnostic("error", "sample_failed", &format!("{}: {}", f.id, f.error));
    }
    Ok(if outcome.all_ok() {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    })
}

pub fn cmd_stats(
    manifest: &Path,
    filter: &SourceFilter,
    cfg: &PipelineConfig,
    json: bool,
) -> Result<String> {
    let tables = Tables::load(cfg)?;
    let m = LoadedManifest::load(manifest, filter)?;
    let records: Vec<_> = m
        .samples
        .iter()
        .map(|s| apply_taxonomy(s, &tables.taxonomy).0)
        .collect();
    let stats = dataset_stats(&records, &tables.taxonomy);
    Ok(if json {
        serde_json::to_string_pretty(&stats)? + "\n"
    } else {
        stats.render()
    })
}

pub struct EvalArgs<'a> {
    pub predictions: &'a Path,
    pub manifest: &'a Path,
    pub task: EvalTask,
    pub filter: SourceFilter,
    pub classes: Option<Vec<String>>,
    pub json: bool,
}

pub fn cmd_eval(args: &EvalArgs, cfg: &PipelineConfig) -> Result<String> {
    let tables = Tables::load(cfg)?;
    let m = LoadedManifest::load(args.manifest, &args.filter)?;
    if m.samples.is_empty() {
        bail!("no ground-truth samples left after source filtering");
    }
    let text = fs::read_to_string(args.predictions)
        .with_context(|| format!("reading {}", args.predictions.display()))?;
    let preds = parse_predictions(&text, &tables.taxonomy)
        .with_context(|| format!("parsing {}", args.predictions.display()))?;
    let classes = match &args.classes {
        Some(names) => Some(
            names
                .iter()
                .map(|n| {
                    Emotion::from_alias(n).with_context(|| format!("unknown emotion class {n:?}"))
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    let report = evaluate(&m, &preds, &tables.taxonomy, args.task, classes.as_deref())?;
    Ok(if args.json {
        serde_json::to_string_pretty(&report)? + "\n"
    } else {
        report.render()
    })
}

/// Writes the built-in tables as JSON files into `out`.
pub fn cmd_dump_tables(out: &Path) -> Result<i32> {
    fs::create_dir_all(out)?;
    for (name, text) in builtin_table_files() {
        fs::write(out.join(name), text)?;
    }
    Ok(EXIT_OK)
}
