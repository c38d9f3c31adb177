//! Motion-grounded annotation of facial micro-expressions.
//!
//! The crate turns a dense optical-flow field, a 468-point face mesh and
//! ground-truth Action Unit / emotion labels into region-wise motion
//! evidence, a dual-verified rule-based rationale and an instruction
//! record. It also carries the HSV flow rendering and the evaluation
//! metrics used on model outputs.
//!
//! Everything here is pure computation over in-memory values and builds
//! under `#![no_std]` with `alloc`. File formats, images and the command
//! line live in the `mer-cli` crate.
//!
//! Image coordinates are used throughout: `x` grows to the right, `y`
//! grows downward, and a flow vector `(u, v)` with negative `v` moves
//! toward the top of the screen. Angles reported by [`evidence`] negate
//! `v` first, so 90° is always screen-up.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod compensation;
pub mod evidence;
pub mod flow;
pub mod geometry;
pub mod instruct;
pub mod labels;
pub mod math;
pub mod metrics;
pub mod pipeline;
pub mod rationale;
pub mod viz;

pub use compensation::{compensate, gamma_correct, nose_centroid, CompensationParams};
pub use evidence::{Direction8, EvidenceParams, IntensityBand, MotionEvidence};
pub use flow::{FlowField, FlowVector, GrayFrame};
pub use geometry::{builtin_roi_catalog, LandmarkSet, RoiCatalog, RoiMask};
pub use labels::{ActionUnit, Emotion};
pub use math::Vec2;
pub use pipeline::{annotate, Annotation, KnowledgeBase, PipelineSettings};
