//! Region-wise motion evidence: dominant direction and peak intensity.
//!
//! Angles are measured counter-clockwise from screen-right with 90° meaning
//! visually upward, so the image-space `v` component is negated before
//! taking `atan2`. Every direction word, color and arc test in the crate
//! relies on this convention.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::flow::FlowField;
use crate::geometry::RoiMask;
use crate::math::{angle_deg, ceil, floor, wrap, Vec2};

/// The eight 45°-wide direction bins, centred on the compass directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction8 {
    #[serde(rename = "R")]
    Right,
    #[serde(rename = "UR")]
    UpperRight,
    #[serde(rename = "Up")]
    Up,
    #[serde(rename = "UL")]
    UpperLeft,
    #[serde(rename = "L")]
    Left,
    #[serde(rename = "LL")]
    LowerLeft,
    #[serde(rename = "D")]
    Down,
    #[serde(rename = "LR")]
    LowerRight,
}

impl Direction8 {
    /// Bins in counter-clockwise order starting at 0°.
    pub const ALL: [Direction8; 8] = [
        Direction8::Right,
        Direction8::UpperRight,
        Direction8::Up,
        Direction8::UpperLeft,
        Direction8::Left,
        Direction8::LowerLeft,
        Direction8::Down,
        Direction8::LowerRight,
    ];

    /// Bin containing `theta` (degrees). Angles exactly on a bin edge go to
    /// the counter-clockwise neighbour.
    pub fn from_angle(theta: f64) -> Direction8 {
        let t = wrap(theta, 360.0);
        let idx = floor((t + 22.5) / 45.0) as usize % 8;
        Self::ALL[idx]
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&d| d == self).expect("listed")
    }

    pub fn center_deg(self) -> f64 {
        self.index() as f64 * 45.0
    }

    /// Next bin counter-clockwise.
    pub fn rotate_ccw(self, steps: usize) -> Direction8 {
        Self::ALL[(self.index() + steps) % 8]
    }

    /// Short code used in emitted records.
    pub fn code(self) -> &'static str {
        match self {
            Direction8::Up => "Up",
            Direction8::UpperRight => "UR",
            Direction8::Right => "R",
            Direction8::LowerRight => "LR",
            Direction8::Down => "D",
            Direction8::LowerLeft => "LL",
            Direction8::Left => "L",
            Direction8::UpperLeft => "UL",
        }
    }

    pub fn from_code(code: &str) -> Option<Direction8> {
        Self::ALL.into_iter().find(|d| d.code() == code)
    }

    pub fn word(self) -> &'static str {
        match self {
            Direction8::Up => "upward",
            Direction8::UpperRight => "upper-right",
            Direction8::Right => "rightward",
            Direction8::LowerRight => "lower-right",
            Direction8::Down => "downward",
            Direction8::LowerLeft => "lower-left",
            Direction8::Left => "leftward",
            Direction8::UpperLeft => "upper-left",
        }
    }

    /// Color name under the visualization convention.
    pub fn color(self) -> &'static str {
        match self {
            Direction8::Up => "purple",
            Direction8::UpperRight => "pink",
            Direction8::Right => "red",
            Direction8::LowerRight => "orange",
            Direction8::Down => "yellow-green",
            Direction8::LowerLeft => "green",
            Direction8::Left => "cyan",
            Direction8::UpperLeft => "blue",
        }
    }
}

impl fmt::Display for Direction8 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Intensity bands over peak magnitude, strongest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntensityBand {
    Micro,
    Subtle,
    Significant,
    Strong,
}

impl IntensityBand {
    /// 0 for Micro up to 3 for Strong.
    pub fn rank(self) -> u8 {
        self as u8
    }

    /// Three-level word used in emitted records. Micro and Subtle both map
    /// to "low"; Micro is distinguished by the below-threshold flag.
    pub fn level_word(self) -> &'static str {
        match self {
            IntensityBand::Strong => "high",
            IntensityBand::Significant => "medium",
            IntensityBand::Subtle | IntensityBand::Micro => "low",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IntensityBand::Strong => "strong",
            IntensityBand::Significant => "significant",
            IntensityBand::Subtle => "subtle",
            IntensityBand::Micro => "micro",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvidenceParams {
    /// Percentage of strongest pixels averaged into the peak intensity.
    pub top_percent: f64,
    pub strong: f64,
    pub significant: f64,
    pub subtle: f64,
    /// Inclusive screen-up arc, degrees.
    pub upward_arc: (f64, f64),
    pub radial_inward_quota: f64,
}

impl Default for EvidenceParams {
    fn default() -> Self {
        Self {
            top_percent: 10.0,
            strong: 15.0,
            significant: 8.0,
            subtle: 3.0,
            upward_arc: (45.0, 135.0),
            radial_inward_quota: 0.70,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvidenceError {
    EmptyMask,
    AllZeroMotion,
    DegenerateBoundary {
        boundary_pixels: usize,
    },
    DimMismatch {
        field: (usize, usize),
        mask: (usize, usize),
    },
    InvalidParams(&'static str),
}

impl fmt::Display for EvidenceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvidenceError::EmptyMask => f.write_str("region mask has no pixels"),
            EvidenceError::AllZeroMotion => f.write_str("every considered pixel has zero motion"),
            EvidenceError::DegenerateBoundary { boundary_pixels } => {
                write!(
                    f,
                    "mask boundary has only {boundary_pixels} pixels, need at least 3"
                )
            }
            EvidenceError::DimMismatch { field, mask } => write!(
                f,
                "flow field is {}x{} but mask is {}x{}",
                field.0, field.1, mask.0, mask.1
            ),
            EvidenceError::InvalidParams(what) => write!(f, "invalid evidence parameters: {what}"),
        }
    }
}

impl core::error::Error for EvidenceError {}

impl EvidenceParams {
    pub fn validate(&self) -> Result<(), EvidenceError> {
        if !(self.top_percent > 0.0 && self.top_percent <= 100.0) {
            return Err(EvidenceError::InvalidParams(
                "top_percent must be in (0, 100]",
            ));
        }
        if !(self.strong > self.significant && self.significant > self.subtle && self.subtle > 0.0)
        {
            return Err(EvidenceError::InvalidParams(
                "thresholds must satisfy strong > significant > subtle > 0",
            ));
        }
        if !(self.radial_inward_quota > 0.0 && self.radial_inward_quota <= 1.0) {
            return Err(EvidenceError::InvalidParams(
                "radial_inward_quota must be in (0, 1]",
            ));
        }
        let (lo, hi) = self.upward_arc;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(EvidenceError::InvalidParams(
                "upward_arc must be an ordered pair of angles",
            ));
        }
        Ok(())
    }
}

/// Quantified motion of one region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionEvidence {
    pub region: String,
    /// Angle of the mean flow vector, degrees in `[0, 360)`, screen-up = 90.
    pub theta_deg: f64,
    pub direction: Direction8,
    /// Mean magnitude of the strongest `top_percent` of pixels.
    pub peak_intensity: f64,
    pub band: IntensityBand,
    /// Mean flow vector in image coordinates (v downward).
    pub mean_flow: Vec2,
    pub pixel_count: usize,
    /// Share of moving pixels whose own angle lies in the upward arc.
    pub upward_fraction: Option<f64>,
    /// Share of moving boundary pixels pointing toward the mask centroid.
    pub inward_fraction: Option<f64>,
}

impl MotionEvidence {
    pub fn below_threshold(&self) -> bool {
        self.band == IntensityBand::Micro
    }

    pub fn has_motion(&self) -> bool {
        self.peak_intensity > 0.0
    }
}

fn check_dims(field: &FlowField, mask: &RoiMask) -> Result<(), EvidenceError> {
    if field.width() != mask.width || field.height() != mask.height {
        return Err(EvidenceError::DimMismatch {
            field: (field.width(), field.height()),
            mask: (mask.width, mask.height),
        });
    }
    Ok(())
}

/// Screen-up angle of an image-space vector.
pub fn screen_angle(v: Vec2) -> f64 {
    angle_deg(-v.y, v.x)
}

/// Mean masked flow vector (image coordinates) and its screen angle.
pub fn mean_flow(field: &FlowField, mask: &RoiMask) -> Result<(Vec2, usize), EvidenceError> {
    check_dims(field, mask)?;
    let mut sum = Vec2::ZERO;
    let mut n = 0usize;
    for (x, y) in mask.pixels() {
        sum = sum + field.get(x, y).to_vec2();
        n += 1;
    }
    if n == 0 {
        return Err(EvidenceError::EmptyMask);
    }
    Ok((Vec2::new(sum.x / n as f64, sum.y / n as f64), n))
}

/// Angle of the mean masked vector and its direction bin.
pub fn dominant_direction(
    field: &FlowField,
    mask: &RoiMask,
) -> Result<(f64, Direction8), EvidenceError> {
    let (mean, _) = mean_flow(field, mask)?;
    let theta = screen_angle(mean);
    Ok((theta, Direction8::from_angle(theta)))
}

/// Number of pixels averaged for `n` masked pixels: `ceil(K% * n)`, at least 1.
pub fn top_count(n: usize, top_percent: f64) -> usize {
    let k = ceil(top_percent * n as f64 / 100.0) as usize;
    k.clamp(1, n.max(1))
}

/// Mean magnitude of the strongest `top_percent` of masked pixels.
pub fn peak_intensity(
    field: &FlowField,
    mask: &RoiMask,
    params: &EvidenceParams,
) -> Result<f64, EvidenceError> {
    check_dims(field, mask)?;
    let mut mags: Vec<f64> = mask
        .pixels()
        .map(|(x, y)| field.get(x, y).magnitude())
        .collect();
    if mags.is_empty() {
        return Err(EvidenceError::EmptyMask);
    }
    mags.sort_by(|a, b| b.total_cmp(a));
    let k = top_count(mags.len(), params.top_percent);
    let sum: f64 = mags[..k].iter().sum();
    Ok(sum / k as f64)
}

/// Band for a peak magnitude, using strict thresholds.
pub fn classify_intensity(m: f64, params: &EvidenceParams) -> IntensityBand {
    if m > params.strong {
        IntensityBand::Strong
    } else if m > params.significant {
        IntensityBand::Significant
    } else if m > params.subtle {
        IntensityBand::Subtle
    } else {
        IntensityBand::Micro
    }
}

/// Whether `theta` lies in the inclusive arc `[lo, hi]`, wrapping at 360.
pub fn angle_in_arc(theta: f64, (lo, hi): (f64, f64)) -> bool {
    if hi - lo >= 360.0 {
        return true;
    }
    let span = hi - lo;
    let offset = wrap(theta - lo, 360.0);
    offset <= span
}

/// Share of moving masked pixels whose screen angle is in the upward arc.
pub fn upward_fraction(
    field: &FlowField,
    mask: &RoiMask,
    params: &EvidenceParams,
) -> Result<f64, EvidenceError> {
    check_dims(field, mask)?;
    let mut total = 0usize;
    let mut up = 0usize;
    let mut any = false;
    for (x, y) in mask.pixels() {
        any = true;
        let f = field.get(x, y);
        if f.magnitude() == 0.0 {
            continue;
        }
        total += 1;
        if angle_in_arc(screen_angle(f.to_vec2()), params.upward_arc) {
            up += 1;
        }
    }
    if !any {
        return Err(EvidenceError::EmptyMask);
    }
    if total == 0 {
        return Err(EvidenceError::AllZeroMotion);
    }
    Ok(up as f64 / total as f64)
}

/// Share of moving boundary pixels whose flow has a positive component
/// toward the mask centroid.
pub fn radial_inward_fraction(field: &FlowField, mask: &RoiMask) -> Result<f64, EvidenceError> {
    check_dims(field, mask)?;
    let centroid = mask.centroid().ok_or(EvidenceError::EmptyMask)?;
    let boundary = mask.boundary_pixels();
    if boundary.len() < 3 {
        return Err(EvidenceError::DegenerateBoundary {
            boundary_pixels: boundary.len(),
        });
    }
    let mut total = 0usize;
    let mut inward = 0usize;
    for (x, y) in boundary {
        let f = field.get(x, y);
        if f.magnitude() == 0.0 {
            continue;
        }
        total += 1;
        let to_center = centroid - Vec2::new(x as f64, y as f64);
        if f.to_vec2().dot(to_center) > 0.0 {
            inward += 1;
        }
    }
    if total == 0 {
        return Err(EvidenceError::AllZeroMotion);
    }
    Ok(inward as f64 / total as f64)
}

/// Full evidence record for one region.
pub fn region_evidence(
    field: &FlowField,
    mask: &RoiMask,
    params: &EvidenceParams,
) -> Result<MotionEvidence, EvidenceError> {
    let (mean, n) = mean_flow(field, mask)?;
    let theta = screen_angle(mean);
    let peak = peak_intensity(field, mask, params)?;
    Ok(MotionEvidence {
        region: mask.region_name.clone(),
        theta_deg: theta,
        direction: Direction8::from_angle(theta),
        peak_intensity: peak,
        band: classify_intensity(peak, params),
        mean_flow: mean,
        pixel_count: n,
        upward_fraction: upward_fraction(field, mask, params).ok(),
        inward_fraction: radial_inward_fraction(field, mask).ok(),
    })
}

/// Evidence for every region, ordered by region name.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvidenceSet {
    pub regions: BTreeMap<String, MotionEvidence>,
    /// Regions left out, with the reason.
    pub skipped: Vec<(String, String)>,
}

impl EvidenceSet {
    pub fn get(&self, region: &str) -> Option<&MotionEvidence> {
        self.regions.get(region)
    }
}

/// Computes [`MotionEvidence`] for every mask. Empty or mismatched masks
/// are recorded in `skipped` instead of failing the whole set.
pub fn evidence_vector(
    field: &FlowField,
    masks: &BTreeMap<String, RoiMask>,
    params: &EvidenceParams,
) -> EvidenceSet {
    let mut set = EvidenceSet::default();
    for (name, mask) in masks {
        match region_evidence(field, mask, params) {
            Ok(ev) => {
                set.regions.insert(name.clone(), ev);
            }
            Err(e) => set.skipped.push((name.clone(), alloc::format!("{e}"))),
        }
    }
    set
}
