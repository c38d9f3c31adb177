//! Per-sample annotation: regions, compensation, gamma, evidence, dual
//! verification, rationale and the instruction triple.

use alloc::collections::BTreeSet;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::compensation::{compensate, gamma_correct, CompensationError, CompensationParams};
use crate::evidence::{evidence_vector, EvidenceError, EvidenceParams, EvidenceSet, IntensityBand};
use crate::flow::FlowField;
use crate::geometry::{builtin_roi_catalog, extract_rois, LandmarkSet, RoiCatalog};
use crate::instruct::{build_triple, InstructionTriple};
use crate::labels::{ActionUnit, Emotion};
use crate::rationale::{
    backward_verify, builtin_expectations, builtin_prototypes, compose_rationale, forward_verify,
    EmotionPrototype, ExpectationTable, Rationale, RationaleError, VerificationReport,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineSettings {
    pub compensation: CompensationParams,
    pub evidence: EvidenceParams,
    /// Measure evidence on the gamma-corrected field rather than the
    /// compensated one.
    pub evidence_after_gamma: bool,
    /// Lowest band at which unexplained motion becomes an anomaly.
    pub backward_band: IntensityBand,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self {
            compensation: CompensationParams::default(),
            evidence: EvidenceParams::default(),
            evidence_after_gamma: true,
            backward_band: IntensityBand::Strong,
        }
    }
}

/// Region catalog and rule tables shared by every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    pub catalog: RoiCatalog,
    pub expectations: ExpectationTable,
    pub prototypes: alloc::vec::Vec<EmotionPrototype>,
}

impl Default for KnowledgeBase {
    fn default() -> Self {
        Self {
            catalog: builtin_roi_catalog(),
            expectations: builtin_expectations(),
            prototypes: builtin_prototypes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PipelineError {
    DimMismatch {
        flow: (usize, usize),
        landmarks: (u32, u32),
    },
    Compensation(CompensationError),
    Evidence(EvidenceError),
    Rationale(RationaleError),
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::DimMismatch { flow, landmarks } => write!(
                f,
                "flow is {}x{} but landmarks refer to a {}x{} frame",
                flow.0, flow.1, landmarks.0, landmarks.1
            ),
            PipelineError::Compensation(e) => write!(f, "compensation: {e}"),
            PipelineError::Evidence(e) => write!(f, "evidence: {e}"),
            PipelineError::Rationale(e) => write!(f, "rationale: {e}"),
        }
    }
}

impl core::error::Error for PipelineError {}

impl From<CompensationError> for PipelineError {
    fn from(e: CompensationError) -> Self {
        PipelineError::Compensation(e)
    }
}

impl From<RationaleError> for PipelineError {
    fn from(e: RationaleError) -> Self {
        PipelineError::Rationale(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    /// Compensated and gamma-corrected field, as rendered for display.
    pub visual: FlowField,
    pub evidence: EvidenceSet,
    pub report: VerificationReport,
    pub rationale: Rationale,
    pub triple: InstructionTriple,
}

pub fn annotate(
    raw: &FlowField,
    landmarks: &LandmarkSet,
    gt_aus: &BTreeSet<ActionUnit>,
    emotion: Emotion,
    settings: &PipelineSettings,
    kb: &KnowledgeBase,
) -> Result<Annotation, PipelineError> {
    let (w, h) = landmarks.frame_dims();
    if (w as usize, h as usize) != (raw.width(), raw.height()) {
        return Err(PipelineError::DimMismatch {
            flow: (raw.width(), raw.height()),
            landmarks: (w, h),
        });
    }
    settings
        .evidence
        .validate()
        .map_err(PipelineError::Evidence)?;
    let masks = extract_rois(landmarks, &kb.catalog);
    let compensated = compensate(raw, landmarks, &settings.compensation)?;
    let visual = gamma_correct(&compensated, &settings.compensation);
    let measured = if settings.evidence_after_gamma {
        &visual
    } else {
        &compensated
    };
    let evidence = evidence_vector(measured, &masks, &settings.evidence);
    let forward = forward_verify(
        gt_aus,
        &evidence,
        &kb.expectations,
        &kb.catalog,
        &settings.evidence,
    )?;
    let anomalies = backward_verify(&evidence, gt_aus, &kb.catalog, settings.backward_band);
    let report = VerificationReport { forward, anomalies };
    let rationale = compose_rationale(
        &report,
        gt_aus,
        emotion,
        &evidence,
        &kb.prototypes,
        &kb.catalog,
    );
    let triple = build_triple(gt_aus, emotion, &evidence, rationale.to_text());
    Ok(Annotation {
        visual,
        evidence,
        report,
        rationale,
        triple,
    })
}
