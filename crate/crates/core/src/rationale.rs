//! Dual verification of ground-truth AUs against regional motion, and the
//! rule-based three-part rationale built from it.
//!
//! Forward verification walks the labeled AUs and checks the motion in
//! their regions against a per-AU directional expectation; subtle motion
//! counts as long as it points the right way. Backward verification walks
//! the strongly moving regions and flags those no labeled AU explains,
//! attributing peri-orbital ones to blinks and the rest to noise.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::{self, Write};

use serde::{Deserialize, Serialize};

use crate::evidence::{angle_in_arc, EvidenceParams, EvidenceSet, IntensityBand, MotionEvidence};
use crate::geometry::{is_periorbital, RoiCatalog, Side};
use crate::labels::{ActionUnit, Emotion};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionTest {
    /// Mean direction in the configured upward arc.
    UpwardArc,
    /// Mean direction in the arc opposite the upward arc.
    DownwardArc,
    /// Enough boundary vectors point toward the region centre.
    RadialInward,
    /// Mean direction within 45° of horizontal, away from the face midline.
    LateralOutward,
    /// Mean direction in the 90° arc between straight up and outward.
    UpwardArcNarrow,
    AnyDirection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuExpectation {
    pub au: ActionUnit,
    /// Regions to test; empty means the catalog's regions for `au`.
    #[serde(default)]
    pub regions: Vec<String>,
    pub motion_test: MotionTest,
    #[serde(default = "default_min_band")]
    pub min_band: IntensityBand,
}

fn default_min_band() -> IntensityBand {
    IntensityBand::Micro
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectationTable {
    pub expectations: Vec<AuExpectation>,
}

impl ExpectationTable {
    pub fn get(&self, au: ActionUnit) -> Option<&AuExpectation> {
        self.expectations.iter().find(|e| e.au == au)
    }

    /// Every core AU has exactly one entry.
    pub fn validate(&self) -> Result<(), RationaleError> {
        for au in ActionUnit::core() {
            let n = self.expectations.iter().filter(|e| e.au == au).count();
            if n != 1 {
                return Err(RationaleError::InvalidTable(alloc::format!(
                    "{au} has {n} expectation entries"
                )));
            }
        }
        Ok(())
    }
}

pub fn builtin_expectations() -> ExpectationTable {
    use MotionTest::*;
    let rows = [
        (1, UpwardArc),
        (2, UpwardArc),
        (4, DownwardArc),
        (5, UpwardArc),
        (6, UpwardArc),
        (7, RadialInward),
        (9, UpwardArc),
        (10, UpwardArc),
        (12, UpwardArcNarrow),
        (14, LateralOutward),
        (15, DownwardArc),
        (17, UpwardArc),
    ];
    ExpectationTable {
        expectations: rows
            .into_iter()
            .map(|(n, motion_test)| AuExpectation {
                au: ActionUnit(n),
                regions: Vec::new(),
                motion_test,
                min_band: IntensityBand::Micro,
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmotionPrototype {
    pub au_pattern: BTreeSet<ActionUnit>,
    pub emotion: Emotion,
    pub note: String,
    /// The pattern is characteristic when it occurs on one side only.
    #[serde(default)]
    pub unilateral: bool,
}

impl EmotionPrototype {
    pub fn matches(&self, gt: &BTreeSet<ActionUnit>) -> bool {
        !self.au_pattern.is_empty() && self.au_pattern.is_subset(gt)
    }
}

pub fn builtin_prototypes() -> Vec<EmotionPrototype> {
    let proto = |aus: &[u8], emotion: Emotion, note: &str, unilateral: bool| EmotionPrototype {
        au_pattern: aus.iter().map(|&n| ActionUnit(n)).collect(),
        emotion,
        note: note.to_string(),
        unilateral,
    };
    alloc::vec![
        proto(&[6, 12], Emotion::Happiness, "The co-occurrence of AU6 and AU12 is linked to happiness.", false),
        proto(&[1, 2, 5], Emotion::Surprise, "Raised inner and outer brows with raised upper lids (AU1, AU2, AU5) form the typical surprise pattern.", false),
        proto(&[4, 7], Emotion::Anger, "Lowered brows with tightened lids (AU4, AU7) are characteristic of anger.", false),
        proto(&[9, 10], Emotion::Disgust, "Nose wrinkling with a raised upper lip (AU9, AU10) is characteristic of disgust.", false),
        proto(&[1, 4, 15], Emotion::Sadness, "Raised inner brows, lowered brows and depressed lip corners (AU1, AU4, AU15) indicate sadness.", false),
        proto(&[1, 2, 4, 5], Emotion::Fear, "Raised and drawn-together brows with raised upper lids (AU1, AU2, AU4, AU5) indicate fear.", false),
        proto(&[12], Emotion::Contempt, "A lip corner pull (AU12) confined to one side of the face is associated with contempt.", true),
        proto(&[14], Emotion::Contempt, "A dimpler (AU14) confined to one side of the face is associated with contempt.", true),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub enum RationaleError {
    UnknownAu(ActionUnit),
    InvalidTable(String),
}

impl fmt::Display for RationaleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RationaleError::UnknownAu(au) => write!(f, "no expectation is defined for {au}"),
            RationaleError::InvalidTable(msg) => write!(f, "invalid expectation table: {msg}"),
        }
    }
}

impl core::error::Error for RationaleError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Verified,
    Contradicted,
    /// Motion is present but neither matches nor opposes the expectation.
    Unconfirmed,
    Absent,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Verified => "verified",
            Outcome::Contradicted => "contradicted",
            Outcome::Unconfirmed => "unconfirmed",
            Outcome::Absent => "absent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCheck {
    pub region: String,
    pub outcome: Outcome,
    pub evidence: MotionEvidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardEntry {
    pub au: ActionUnit,
    pub outcome: Outcome,
    pub regions: Vec<RegionCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribution {
    Blink,
    Noise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anomaly {
    pub region: String,
    pub evidence: MotionEvidence,
    pub attribution: Attribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub forward: BTreeMap<ActionUnit, ForwardEntry>,
    pub anomalies: Vec<Anomaly>,
}

fn opposite((lo, hi): (f64, f64)) -> (f64, f64) {
    (lo + 180.0, hi + 180.0)
}

/// Expected and opposite arcs for a directional test on one side of the face.
fn arcs(test: MotionTest, side: Side, params: &EvidenceParams) -> Option<((f64, f64), (f64, f64))> {
    let up = params.upward_arc;
    let arc = match (test, side) {
        (MotionTest::UpwardArc, _) => up,
        (MotionTest::DownwardArc, _) => opposite(up),
        (MotionTest::LateralOutward, Side::Left) => (135.0, 225.0),
        (MotionTest::LateralOutward, Side::Right) => (-45.0, 45.0),
        (MotionTest::UpwardArcNarrow, Side::Left) => (90.0, 180.0),
        (MotionTest::UpwardArcNarrow, Side::Right) => (0.0, 90.0),
        (MotionTest::UpwardArcNarrow, Side::Central) => up,
        _ => return None,
    };
    Some((arc, opposite(arc)))
}

/// Checks one region's evidence against an AU expectation.
pub fn assess_region(
    test: MotionTest,
    min_band: IntensityBand,
    side: Side,
    ev: &MotionEvidence,
    params: &EvidenceParams,
) -> Outcome {
    if !ev.has_motion() {
        return Outcome::Absent;
    }
    let outcome = match test {
        MotionTest::AnyDirection => Outcome::Verified,
        MotionTest::RadialInward => match ev.inward_fraction {
            Some(f) if f > params.radial_inward_quota => Outcome::Verified,
            Some(f) if f < 1.0 - params.radial_inward_quota => Outcome::Contradicted,
            _ => Outcome::Unconfirmed,
        },
        MotionTest::LateralOutward if side == Side::Central => {
            if angle_in_arc(ev.theta_deg, (135.0, 225.0))
                || angle_in_arc(ev.theta_deg, (-45.0, 45.0))
            {
                Outcome::Verified
            } else {
                Outcome::Unconfirmed
            }
        }
        _ => {
            let (expected, opposed) = arcs(test, side, params).expect("directional test");
            if angle_in_arc(ev.theta_deg, expected) {
                Outcome::Verified
            } else if angle_in_arc(ev.theta_deg, opposed) {
                Outcome::Contradicted
            } else {
                Outcome::Unconfirmed
            }
        }
    };
    if outcome == Outcome::Verified && ev.band < min_band {
        Outcome::Unconfirmed
    } else {
        outcome
    }
}

fn aggregate(checks: &[RegionCheck]) -> Outcome {
    let has = |o: Outcome| checks.iter().any(|c| c.outcome == o);
    if has(Outcome::Verified) {
        Outcome::Verified
    } else if has(Outcome::Contradicted) {
        Outcome::Contradicted
    } else if has(Outcome::Unconfirmed) {
        Outcome::Unconfirmed
    } else {
        Outcome::Absent
    }
}

/// Ground truth to evidence: one entry per labeled AU.
pub fn forward_verify(
    gt_aus: &BTreeSet<ActionUnit>,
    evidence: &EvidenceSet,
    expectations: &ExpectationTable,
    catalog: &RoiCatalog,
    params: &EvidenceParams,
) -> Result<BTreeMap<ActionUnit, ForwardEntry>, RationaleError> {
    let mut out = BTreeMap::new();
    for &au in gt_aus {
        let exp = expectations.get(au).ok_or(RationaleError::UnknownAu(au))?;
        let regions: &[String] = if exp.regions.is_empty() {
            catalog.regions_for(au)
        } else {
            &exp.regions
        };
        let checks: Vec<RegionCheck> = regions
            .iter()
            .filter_map(|name| {
                let ev = evidence.get(name)?;
                let side = catalog
                    .region(name)
                    .map(|s| s.side)
                    .unwrap_or(Side::Central);
                Some(RegionCheck {
                    region: name.clone(),
                    outcome: assess_region(exp.motion_test, exp.min_band, side, ev, params),
                    evidence: ev.clone(),
                })
            })
            .collect();
        out.insert(
            au,
            ForwardEntry {
                au,
                outcome: aggregate(&checks),
                regions: checks,
            },
        );
    }
    Ok(out)
}

/// Regions whose motion a labeled AU accounts for: the AU's own regions
/// plus regions nested inside or around them (e.g. inner brow within full
/// brow).
pub fn explained_regions(gt_aus: &BTreeSet<ActionUnit>, catalog: &RoiCatalog) -> BTreeSet<String> {
    let direct: BTreeSet<&String> = gt_aus
        .iter()
        .flat_map(|&au| catalog.regions_for(au))
        .collect();
    let mut out: BTreeSet<String> = direct.iter().map(|s| (*s).clone()).collect();
    for (name, spec) in &catalog.regions {
        let own: BTreeSet<usize> = spec.landmark_indices.iter().copied().collect();
        let nested = direct.iter().any(|d| {
            catalog.region(d).is_some_and(|other| {
                let theirs: BTreeSet<usize> = other.landmark_indices.iter().copied().collect();
                own.is_subset(&theirs) || theirs.is_subset(&own)
            })
        });
        if nested {
            out.insert(name.clone());
        }
    }
    out
}

/// Evidence to ground truth: regions at or above `min_band` that no
/// labeled AU explains.
pub fn backward_verify(
    evidence: &EvidenceSet,
    gt_aus: &BTreeSet<ActionUnit>,
    catalog: &RoiCatalog,
    min_band: IntensityBand,
) -> Vec<Anomaly> {
    let explained = explained_regions(gt_aus, catalog);
    evidence
        .regions
        .iter()
        .filter(|(name, ev)| ev.band >= min_band && !explained.contains(*name))
        .map(|(name, ev)| Anomaly {
            region: name.clone(),
            evidence: ev.clone(),
            attribution: if is_periorbital(name) {
                Attribution::Blink
            } else {
                Attribution::Noise
            },
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSymmetry {
    pub left: String,
    pub right: String,
    pub symmetric: bool,
}

/// Symmetric pairs share a direction bin and differ by at most one band.
pub fn symmetry_analysis(evidence: &EvidenceSet, paired: &[(String, String)]) -> Vec<PairSymmetry> {
    paired
        .iter()
        .filter_map(|(l, r)| {
            let (a, b) = (evidence.get(l)?, evidence.get(r)?);
            let gap = a.band.rank().abs_diff(b.band.rank());
            Some(PairSymmetry {
                left: l.clone(),
                right: r.clone(),
                symmetric: a.direction == b.direction && gap <= 1,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rationale {
    pub analysis: String,
    pub reasoning: String,
    pub conclusion: String,
}

impl Rationale {
    pub fn to_text(&self) -> String {
        alloc::format!(
            "Analysis process: {}\nExpression reasoning: {}\nConclusion: {}",
            self.analysis,
            self.reasoning,
            self.conclusion
        )
    }
}

fn au_label(au: ActionUnit) -> String {
    match au.facs_name() {
        Some(name) => alloc::format!("{au} ({name})"),
        None => alloc::format!("{au}"),
    }
}

fn describe_motion(ev: &MotionEvidence) -> String {
    if !ev.has_motion() {
        return alloc::format!("{} shows no measurable motion", ev.region);
    }
    alloc::format!(
        "{} shows {} motion ({}) at {} intensity (peak {:.2} px/frame)",
        ev.region,
        ev.direction.word(),
        ev.direction.color(),
        ev.band.name(),
        ev.peak_intensity
    )
}

fn join_list(items: &[String]) -> String {
    match items.len() {
        0 => String::new(),
        1 => items[0].clone(),
        2 => alloc::format!("{} and {}", items[0], items[1]),
        n => alloc::format!("{}, and {}", items[..n - 1].join(", "), items[n - 1]),
    }
}

/// Assembles the analysis / reasoning / conclusion text. The conclusion is
/// always the ground truth; prototypes only shape the reasoning prose.
pub fn compose_rationale(
    report: &VerificationReport,
    gt_aus: &BTreeSet<ActionUnit>,
    gt_emotion: Emotion,
    evidence: &EvidenceSet,
    prototypes: &[EmotionPrototype],
    catalog: &RoiCatalog,
) -> Rationale {
    let mut analysis = String::new();
    let mut mentioned: BTreeSet<&str> = BTreeSet::new();

    if report.forward.is_empty() {
        analysis.push_str("No Action Units are labeled for this sample.");
    }
    for entry in report.forward.values() {
        let label = au_label(entry.au);
        if !analysis.is_empty() {
            analysis.push(' ');
        }
        if entry.regions.is_empty() {
            let _ = write!(analysis, "No regional evidence is available for {label}.");
            continue;
        }
        let parts: Vec<String> = entry
            .regions
            .iter()
            .map(|c| describe_motion(&c.evidence))
            .collect();
        for c in &entry.regions {
            mentioned.insert(c.region.as_str());
        }
        let _ = write!(analysis, "For {label}, {}. ", join_list(&parts));
        let verdict = match entry.outcome {
            Outcome::Verified => {
                let weak = entry.regions.iter().all(|c| c.evidence.band.rank() < IntensityBand::Significant.rank());
                if weak {
                    alloc::format!("This motion is consistent with {label}, although it is subtle.")
                } else {
                    alloc::format!("This motion is consistent with {label}.")
                }
            }
            Outcome::Contradicted => alloc::format!(
                "This motion runs opposite to the movement expected for {label} and is flagged as noisy motion."
            ),
            Outcome::Unconfirmed => {
                alloc::format!("The direction of this motion does not clearly match the movement expected for {label}.")
            }
            Outcome::Absent => alloc::format!("No measurable motion supports {label} in these regions."),
        };
        analysis.push_str(&verdict);
    }

    let anomaly_regions: BTreeSet<&str> =
        report.anomalies.iter().map(|a| a.region.as_str()).collect();
    let extra: Vec<String> = evidence
        .regions
        .values()
        .filter(|ev| {
            ev.band >= IntensityBand::Significant
                && !mentioned.contains(ev.region.as_str())
                && !anomaly_regions.contains(ev.region.as_str())
        })
        .map(describe_motion)
        .collect();
    if !extra.is_empty() {
        let _ = write!(analysis, " Also observed: {}.", join_list(&extra));
    }

    for a in &report.anomalies {
        let what = describe_motion(&a.evidence);
        let _ = match a.attribution {
            Attribution::Blink => write!(
                analysis,
                " Interference: {what}, which no labeled AU explains; this is likely an eye blink."
            ),
            Attribution::Noise => write!(
                analysis,
                " Interference: {what}, which no labeled AU explains; this is flagged as potential noise from illumination changes or other artifacts."
            ),
        };
    }

    let symmetry = symmetry_analysis(evidence, &catalog.paired);
    let relevant = explained_regions(gt_aus, catalog);
    let mut reasoning = String::new();
    let matched: Vec<&EmotionPrototype> = prototypes.iter().filter(|p| p.matches(gt_aus)).collect();
    if matched.is_empty() {
        reasoning.push_str("The labeled AU combination does not match a prototypical expression pattern in the knowledge base.");
    }
    for p in &matched {
        if !reasoning.is_empty() {
            reasoning.push(' ');
        }
        reasoning.push_str(&p.note);
        if p.unilateral {
            let pattern_regions: BTreeSet<&String> = p
                .au_pattern
                .iter()
                .flat_map(|&au| catalog.regions_for(au))
                .collect();
            let sides: Vec<&PairSymmetry> = symmetry
                .iter()
                .filter(|s| pattern_regions.contains(&s.left) || pattern_regions.contains(&s.right))
                .collect();
            if !sides.is_empty() {
                if sides.iter().any(|s| !s.symmetric) {
                    reasoning.push_str(" Here the corresponding regions move asymmetrically.");
                } else {
                    reasoning.push_str(" Here the corresponding regions move symmetrically, so a unilateral action is not evident.");
                }
            }
        }
    }
    let sym: Vec<String> = symmetry
        .iter()
        .filter(|s| relevant.contains(&s.left) || relevant.contains(&s.right))
        .filter(|s| {
            evidence
                .get(&s.left)
                .is_some_and(MotionEvidence::has_motion)
                || evidence
                    .get(&s.right)
                    .is_some_and(MotionEvidence::has_motion)
        })
        .map(|s| {
            let (l, r) = (&evidence.regions[&s.left], &evidence.regions[&s.right]);
            alloc::format!(
                "{} and {} are {} ({} {} vs {} {})",
                s.left,
                s.right,
                if s.symmetric {
                    "symmetric"
                } else {
                    "asymmetric"
                },
                l.direction.code(),
                l.band.name(),
                r.direction.code(),
                r.band.name()
            )
        })
        .collect();
    if !sym.is_empty() {
        let _ = write!(reasoning, " Symmetry: {}.", join_list(&sym));
    }

    let aus: Vec<String> = gt_aus.iter().map(|&au| au_label(au)).collect();
    let conclusion = if aus.is_empty() {
        alloc::format!(
            "Activated AUs: none. Final emotion: {}.",
            gt_emotion.as_str()
        )
    } else {
        alloc::format!(
            "Activated AUs: {}. Final emotion: {}.",
            aus.join(", "),
            gt_emotion.as_str()
        )
    };

    Rationale {
        analysis,
        reasoning,
        conclusion,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evidence::Direction8;
    use crate::geometry::builtin_roi_catalog;
    use crate::math::Vec2;

    fn ev(region: &str, theta: f64, peak: f64) -> MotionEvidence {
        let p = EvidenceParams::default();
        MotionEvidence {
            region: region.to_string(),
            theta_deg: theta,
            direction: Direction8::from_angle(theta),
            peak_intensity: peak,
            band: crate::evidence::classify_intensity(peak, &p),
            mean_flow: Vec2::ZERO,
            pixel_count: 10,
            upward_fraction: None,
            inward_fraction: None,
        }
    }

    fn set(items: &[MotionEvidence]) -> EvidenceSet {
        EvidenceSet {
            regions: items
                .iter()
                .map(|e| (e.region.clone(), e.clone()))
                .collect(),
            skipped: Vec::new(),
        }
    }

    fn aus(ns: &[u8]) -> BTreeSet<ActionUnit> {
        ns.iter().map(|&n| ActionUnit(n)).collect()
    }

    fn calm_face() -> Vec<MotionEvidence> {
        builtin_roi_catalog()
            .regions
            .keys()
            .map(|r| ev(r, 0.0, 0.0))
            .collect()
    }

    fn with(mut base: Vec<MotionEvidence>, over: &[MotionEvidence]) -> EvidenceSet {
        for o in over {
            base.retain(|e| e.region != o.region);
            base.push(o.clone());
        }
        set(&base)
    }

    #[test]
    fn builtin_tables_are_complete() {
        builtin_expectations().validate().unwrap();
        let protos = builtin_prototypes();
        assert!(protos.iter().all(|p| !p.au_pattern.is_empty()));
        assert_eq!(protos[0].emotion, Emotion::Happiness);
    }

    #[test]
    fn downward_brows_verify_au4_and_contradict_au1() {
        let cat = builtin_roi_catalog();
        let p = EvidenceParams::default();
        let e = with(
            calm_face(),
            &[
                ev("left_full_eyebrow", 270.0, 10.0),
                ev("right_full_eyebrow", 270.0, 10.0),
                ev("left_inner_eyebrow", 270.0, 10.0),
                ev("right_inner_eyebrow", 270.0, 10.0),
            ],
        );
        let f = forward_verify(&aus(&[4]), &e, &builtin_expectations(), &cat, &p).unwrap();
        assert_eq!(f[&ActionUnit(4)].outcome, Outcome::Verified);
        let f = forward_verify(&aus(&[1]), &e, &builtin_expectations(), &cat, &p).unwrap();
        assert_eq!(f[&ActionUnit(1)].outcome, Outcome::Contradicted);
        assert!(
            forward_verify(&aus(&[]), &e, &builtin_expectations(), &cat, &p)
                .unwrap()
                .is_empty()
        );
        assert_eq!(
            forward_verify(&aus(&[43]), &e, &builtin_expectations(), &cat, &p),
            Err(RationaleError::UnknownAu(ActionUnit(43)))
        );
    }

    #[test]
    fn subtle_but_aligned_motion_verifies() {
        let cat = builtin_roi_catalog();
        let e = with(calm_face(), &[ev("left_inner_eyebrow", 95.0, 0.5)]);
        let f = forward_verify(
            &aus(&[1]),
            &e,
            &builtin_expectations(),
            &cat,
            &EvidenceParams::default(),
        )
        .unwrap();
        assert_eq!(f[&ActionUnit(1)].outcome, Outcome::Verified);
        let still = set(&calm_face());
        let f = forward_verify(
            &aus(&[1]),
            &still,
            &builtin_expectations(),
            &cat,
            &EvidenceParams::default(),
        )
        .unwrap();
        assert_eq!(f[&ActionUnit(1)].outcome, Outcome::Absent);
        let sideways = with(calm_face(), &[ev("left_inner_eyebrow", 0.0, 5.0)]);
        let f = forward_verify(
            &aus(&[1]),
            &sideways,
            &builtin_expectations(),
            &cat,
            &EvidenceParams::default(),
        )
        .unwrap();
        assert_eq!(f[&ActionUnit(1)].outcome, Outcome::Unconfirmed);
    }

    #[test]
    fn radial_test_uses_quota() {
        let p = EvidenceParams::default();
        let mut e = ev("left_eye_complete", 0.0, 4.0);
        e.inward_fraction = Some(0.71);
        assert_eq!(
            assess_region(
                MotionTest::RadialInward,
                IntensityBand::Micro,
                Side::Left,
                &e,
                &p
            ),
            Outcome::Verified
        );
        e.inward_fraction = Some(0.70);
        assert_eq!(
            assess_region(
                MotionTest::RadialInward,
                IntensityBand::Micro,
                Side::Left,
                &e,
                &p
            ),
            Outcome::Unconfirmed
        );
        e.inward_fraction = Some(0.1);
        assert_eq!(
            assess_region(
                MotionTest::RadialInward,
                IntensityBand::Micro,
                Side::Left,
                &e,
                &p
            ),
            Outcome::Contradicted
        );
    }

    #[test]
    fn lateral_tests_depend_on_side() {
        let p = EvidenceParams::default();
        let left = ev("left_mouth_corner", 180.0, 4.0);
        let right = ev("right_mouth_corner", 0.0, 4.0);
        assert_eq!(
            assess_region(
                MotionTest::LateralOutward,
                IntensityBand::Micro,
                Side::Left,
                &left,
                &p
            ),
            Outcome::Verified
        );
        assert_eq!(
            assess_region(
                MotionTest::LateralOutward,
                IntensityBand::Micro,
                Side::Right,
                &right,
                &p
            ),
            Outcome::Verified
        );
        assert_eq!(
            assess_region(
                MotionTest::LateralOutward,
                IntensityBand::Micro,
                Side::Right,
                &left,
                &p
            ),
            Outcome::Contradicted
        );
        let up_out = ev("left_mouth_corner", 135.0, 4.0);
        assert_eq!(
            assess_region(
                MotionTest::UpwardArcNarrow,
                IntensityBand::Micro,
                Side::Left,
                &up_out,
                &p
            ),
            Outcome::Verified
        );
        assert_eq!(
            assess_region(
                MotionTest::UpwardArcNarrow,
                IntensityBand::Micro,
                Side::Right,
                &up_out,
                &p
            ),
            Outcome::Unconfirmed
        );
    }

    #[test]
    fn backward_flags_unexplained_strong_regions() {
        let cat = builtin_roi_catalog();
        let e = with(
            calm_face(),
            &[
                ev("chin", 90.0, 20.0),
                ev("left_eye_complete", 270.0, 16.0),
                ev("mouth", 0.0, 9.0),
            ],
        );
        let anomalies = backward_verify(&e, &aus(&[4]), &cat, IntensityBand::Strong);
        let got: Vec<(&str, Attribution)> = anomalies
            .iter()
            .map(|a| (a.region.as_str(), a.attribution))
            .collect();
        assert_eq!(
            got,
            [
                ("chin", Attribution::Noise),
                ("left_eye_complete", Attribution::Blink)
            ]
        );
        let explained = backward_verify(&e, &aus(&[7, 17]), &cat, IntensityBand::Strong);
        assert!(explained.is_empty(), "{explained:?}");
        let wider = backward_verify(&e, &aus(&[4]), &cat, IntensityBand::Significant);
        assert_eq!(wider.len(), 3);
    }

    #[test]
    fn nested_regions_are_explained() {
        let cat = builtin_roi_catalog();
        let ex = explained_regions(&aus(&[4]), &cat);
        for r in [
            "left_full_eyebrow",
            "left_inner_eyebrow",
            "right_outer_eyebrow",
        ] {
            assert!(ex.contains(r), "{r}");
        }
        assert!(!ex.contains("chin"));
        let ex = explained_regions(&aus(&[5]), &cat);
        assert!(ex.contains("left_eye_complete"));
        assert!(!ex.contains("left_lower_eyelid"));
    }

    #[test]
    fn symmetry_rules() {
        let pairs = [("l".to_string(), "r".to_string())];
        let s = |a: MotionEvidence, b: MotionEvidence| {
            symmetry_analysis(&set(&[a, b]), &pairs)[0].symmetric
        };
        assert!(s(ev("l", 90.0, 10.0), ev("r", 90.0, 10.0)));
        assert!(!s(ev("l", 90.0, 20.0), ev("r", 270.0, 20.0)));
        assert!(!s(ev("l", 90.0, 20.0), ev("r", 90.0, 1.0)));
        assert!(s(ev("l", 90.0, 20.0), ev("r", 90.0, 9.0)));
    }

    fn rationale_for(gt: &[u8], emotion: Emotion, e: &EvidenceSet) -> Rationale {
        let cat = builtin_roi_catalog();
        let gt = aus(gt);
        let forward = forward_verify(
            &gt,
            e,
            &builtin_expectations(),
            &cat,
            &EvidenceParams::default(),
        )
        .unwrap();
        let anomalies = backward_verify(e, &gt, &cat, IntensityBand::Strong);
        let report = VerificationReport { forward, anomalies };
        compose_rationale(&report, &gt, emotion, e, &builtin_prototypes(), &cat)
    }

    #[test]
    fn happiness_prototype_in_reasoning() {
        let e = with(
            calm_face(),
            &[
                ev("left_mouth_corner", 135.0, 9.0),
                ev("right_mouth_corner", 45.0, 9.0),
            ],
        );
        let r = rationale_for(&[6, 12], Emotion::Happiness, &e);
        assert!(
            r.reasoning
                .contains("The co-occurrence of AU6 and AU12 is linked to happiness."),
            "{}",
            r.reasoning
        );
        assert!(
            r.conclusion.contains("AU6")
                && r.conclusion.contains("AU12")
                && r.conclusion.contains("happiness")
        );
    }

    #[test]
    fn conclusion_is_ground_truth() {
        let r = rationale_for(&[4], Emotion::Disgust, &set(&calm_face()));
        assert!(r.conclusion.contains("AU4"));
        assert!(r.conclusion.contains("disgust"));
        let none = rationale_for(&[], Emotion::Other, &set(&calm_face()));
        assert_eq!(
            none.conclusion,
            "Activated AUs: none. Final emotion: other."
        );
    }

    #[test]
    fn analysis_mentions_significant_and_anomalous_regions() {
        let e = with(
            calm_face(),
            &[
                ev("chin", 90.0, 20.0),
                ev("left_nose", 0.0, 9.0),
                ev("left_full_eyebrow", 270.0, 9.0),
            ],
        );
        let r = rationale_for(&[4], Emotion::Anger, &e);
        for region in ["chin", "left_nose", "left_full_eyebrow"] {
            assert!(
                r.analysis.contains(region),
                "{region} missing: {}",
                r.analysis
            );
        }
        assert!(r.analysis.contains("potential noise"));
        assert_eq!(r, rationale_for(&[4], Emotion::Anger, &e));
    }
}
