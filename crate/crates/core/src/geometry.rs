//! Face-mesh landmarks, the facial ROI catalog, convex hulls and mask
//! rasterization.
//!
//! Pixel `(col, row)` is treated as the point `(col, row)`: a pixel is part
//! of a polygon's mask when that point lies inside the polygon or on its
//! boundary.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::labels::ActionUnit;
use crate::math::{ceil, floor, Vec2};

/// Number of points in the dense face mesh.
pub const LANDMARK_COUNT: usize = 468;

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryError {
    WrongLandmarkCount {
        found: usize,
    },
    NonFiniteLandmark {
        index: usize,
    },
    LandmarkOutOfRange {
        index: usize,
        point: Vec2,
    },
    InvalidDims {
        width: u32,
        height: u32,
    },
    /// Fewer than three non-collinear points; callers fall back to a box.
    DegenerateHull,
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::WrongLandmarkCount { found } => {
                write!(f, "expected {LANDMARK_COUNT} landmarks, found {found}")
            }
            GeometryError::NonFiniteLandmark { index } => {
                write!(f, "landmark {index} has a non-finite coordinate")
            }
            GeometryError::LandmarkOutOfRange { index, point } => write!(
                f,
                "landmark {index} at ({}, {}) is implausibly far outside the frame",
                point.x, point.y
            ),
            GeometryError::InvalidDims { width, height } => {
                write!(f, "frame dimensions {width}x{height} must be positive")
            }
            GeometryError::DegenerateHull => {
                f.write_str("points are collinear or fewer than three are distinct")
            }
        }
    }
}

impl core::error::Error for GeometryError {}

/// The 468 mesh points of one frame, in pixel coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    points: Vec<Vec2>,
    frame_dims: (u32, u32),
}

impl LandmarkSet {
    pub fn new(points: Vec<Vec2>, frame_dims: (u32, u32)) -> Result<Self, GeometryError> {
        let (width, height) = frame_dims;
        if width == 0 || height == 0 {
            return Err(GeometryError::InvalidDims { width, height });
        }
        if points.len() != LANDMARK_COUNT {
            return Err(GeometryError::WrongLandmarkCount {
                found: points.len(),
            });
        }
        let (xlim, ylim) = (4.0 * f64::from(width), 4.0 * f64::from(height));
        for (index, p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(GeometryError::NonFiniteLandmark { index });
            }
            if p.x.abs() >= xlim || p.y.abs() >= ylim {
                return Err(GeometryError::LandmarkOutOfRange { index, point: *p });
            }
        }
        Ok(Self { points, frame_dims })
    }

    /// Builds a set from coordinates normalized to `[0, 1]` of the frame.
    pub fn from_normalized(
        points: Vec<Vec2>,
        frame_dims: (u32, u32),
    ) -> Result<Self, GeometryError> {
        let (w, h) = (f64::from(frame_dims.0), f64::from(frame_dims.1));
        let scaled = points
            .into_iter()
            .map(|p| Vec2::new(p.x * w, p.y * h))
            .collect();
        Self::new(scaled, frame_dims)
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Vec2 {
        self.points[index]
    }

    pub fn frame_dims(&self) -> (u32, u32) {
        self.frame_dims
    }

    /// Shifts every point by `(dx, dy)` without re-validating the frame bounds.
    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| Vec2::new(p.x + dx, p.y + dy))
                .collect(),
            frame_dims: self.frame_dims,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Central,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiSpec {
    pub name: String,
    pub landmark_indices: Vec<usize>,
    pub side: Side,
}

impl RoiSpec {
    pub fn landmarks(&self, set: &LandmarkSet) -> Vec<Vec2> {
        self.landmark_indices
            .iter()
            .map(|&i| set.point(i))
            .collect()
    }

    /// Region names containing "eye" cover the peri-orbital area.
    pub fn is_periorbital(&self) -> bool {
        is_periorbital(&self.name)
    }
}

pub fn is_periorbital(region: &str) -> bool {
    region.contains("eyelid") || region.contains("eye_complete")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiCatalog {
    pub regions: BTreeMap<String, RoiSpec>,
    pub au_to_regions: BTreeMap<ActionUnit, Vec<String>>,
    pub paired: Vec<(String, String)>,
}

impl RoiCatalog {
    pub fn region(&self, name: &str) -> Option<&RoiSpec> {
        self.regions.get(name)
    }

    pub fn regions_for(&self, au: ActionUnit) -> &[String] {
        self.au_to_regions
            .get(&au)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// AUs whose region list includes `region`.
    pub fn aus_for_region(&self, region: &str) -> Vec<ActionUnit> {
        self.au_to_regions
            .iter()
            .filter(|(_, names)| names.iter().any(|n| n == region))
            .map(|(au, _)| *au)
            .collect()
    }
}

const LEFT_INNER_EYEBROW: [usize; 6] = [46, 53, 52, 105, 63, 70];
const RIGHT_INNER_EYEBROW: [usize; 6] = [285, 295, 282, 334, 296, 336];
const LEFT_OUTER_EYEBROW: [usize; 6] = [52, 65, 55, 107, 66, 105];
const RIGHT_OUTER_EYEBROW: [usize; 6] = [282, 283, 276, 300, 293, 334];
const LEFT_FULL_EYEBROW: [usize; 10] = [46, 53, 52, 65, 55, 107, 66, 105, 63, 70];
const RIGHT_FULL_EYEBROW: [usize; 10] = [285, 295, 282, 283, 276, 300, 293, 334, 296, 336];
const LEFT_UPPER_EYELID: [usize; 16] = [
    226, 130, 33, 161, 159, 158, 157, 173, 243, 190, 56, 28, 27, 29, 30, 247,
];
const RIGHT_UPPER_EYELID: [usize; 16] = [
    463, 398, 384, 385, 386, 387, 388, 466, 263, 467, 260, 259, 257, 258, 286, 414,
];
const LEFT_LOWER_EYELID: [usize; 18] = [
    226, 130, 33, 7, 144, 145, 153, 154, 133, 244, 245, 233, 232, 231, 230, 229, 228, 31,
];
const RIGHT_LOWER_EYELID: [usize; 18] = [
    446, 359, 263, 390, 373, 374, 380, 381, 362, 464, 465, 453, 452, 451, 450, 449, 448, 261,
];
const LEFT_NOSE: [usize; 7] = [64, 98, 165, 206, 36, 142, 49];
const RIGHT_NOSE: [usize; 7] = [294, 327, 391, 426, 266, 371, 279];
const MOUTH: [usize; 16] = [
    61, 40, 39, 37, 0, 267, 269, 270, 291, 321, 405, 314, 17, 84, 181, 91,
];
const LEFT_MOUTH_CORNER: [usize; 6] = [57, 43, 146, 96, 183, 186];
const RIGHT_MOUTH_CORNER: [usize; 6] = [287, 273, 375, 325, 407, 410];
const CHIN: [usize; 17] = [
    17, 18, 83, 182, 194, 32, 140, 176, 148, 152, 377, 400, 369, 262, 418, 406, 313,
];

/// Order-preserving union without duplicates.
fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = a.to_vec();
    for &i in b {
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

/// The hard-coded facial ROI catalog over the 468-point mesh.
///
/// "left"/"right" follow the mesh's own naming, which is the image-left /
/// image-right side for a frontal face.
pub fn builtin_roi_catalog() -> RoiCatalog {
    let specs: [(&str, Vec<usize>, Side); 18] = [
        (
            "left_inner_eyebrow",
            LEFT_INNER_EYEBROW.to_vec(),
            Side::Left,
        ),
        (
            "right_inner_eyebrow",
            RIGHT_INNER_EYEBROW.to_vec(),
            Side::Right,
        ),
        (
            "left_outer_eyebrow",
            LEFT_OUTER_EYEBROW.to_vec(),
            Side::Left,
        ),
        (
            "right_outer_eyebrow",
            RIGHT_OUTER_EYEBROW.to_vec(),
            Side::Right,
        ),
        ("left_full_eyebrow", LEFT_FULL_EYEBROW.to_vec(), Side::Left),
        (
            "right_full_eyebrow",
            RIGHT_FULL_EYEBROW.to_vec(),
            Side::Right,
        ),
        ("left_upper_eyelid", LEFT_UPPER_EYELID.to_vec(), Side::Left),
        (
            "right_upper_eyelid",
            RIGHT_UPPER_EYELID.to_vec(),
            Side::Right,
        ),
        ("left_lower_eyelid", LEFT_LOWER_EYELID.to_vec(), Side::Left),
        (
            "right_lower_eyelid",
            RIGHT_LOWER_EYELID.to_vec(),
            Side::Right,
        ),
        (
            "left_eye_complete",
            union(&LEFT_UPPER_EYELID, &LEFT_LOWER_EYELID),
            Side::Left,
        ),
        (
            "right_eye_complete",
            union(&RIGHT_UPPER_EYELID, &RIGHT_LOWER_EYELID),
            Side::Right,
        ),
        ("left_nose", LEFT_NOSE.to_vec(), Side::Left),
        ("right_nose", RIGHT_NOSE.to_vec(), Side::Right),
        ("mouth", MOUTH.to_vec(), Side::Central),
        ("left_mouth_corner", LEFT_MOUTH_CORNER.to_vec(), Side::Left),
        (
            "right_mouth_corner",
            RIGHT_MOUTH_CORNER.to_vec(),
            Side::Right,
        ),
        ("chin", CHIN.to_vec(), Side::Central),
    ];
    let regions = specs
        .into_iter()
        .map(|(name, landmark_indices, side)| {
            (
                name.to_string(),
                RoiSpec {
                    name: name.to_string(),
                    landmark_indices,
                    side,
                },
            )
        })
        .collect();

    let bilateral = |stem: &str| -> Vec<String> {
        alloc::vec![
            alloc::format!("left_{stem}"),
            alloc::format!("right_{stem}")
        ]
    };
    let au_to_regions = [
        (1, bilateral("inner_eyebrow")),
        (2, bilateral("outer_eyebrow")),
        (4, bilateral("full_eyebrow")),
        (5, bilateral("upper_eyelid")),
        (6, bilateral("lower_eyelid")),
        (7, bilateral("eye_complete")),
        (9, bilateral("nose")),
        (10, alloc::vec!["mouth".to_string()]),
        (12, bilateral("mouth_corner")),
        (14, bilateral("mouth_corner")),
        (15, bilateral("mouth_corner")),
        (17, alloc::vec!["chin".to_string()]),
    ]
    .into_iter()
    .map(|(n, names)| (ActionUnit(n), names))
    .collect();

    let paired = [
        "inner_eyebrow",
        "outer_eyebrow",
        "full_eyebrow",
        "upper_eyelid",
        "lower_eyelid",
        "eye_complete",
        "nose",
        "mouth_corner",
    ]
    .iter()
    .map(|stem| {
        (
            alloc::format!("left_{stem}"),
            alloc::format!("right_{stem}"),
        )
    })
    .collect();

    RoiCatalog {
        regions,
        au_to_regions,
        paired,
    }
}

fn orientation(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

/// Convex hull by Andrew's monotone chain.
///
/// Vertices come back with positive signed area (counter-clockwise in a
/// y-up frame), starting from the lexicographically smallest point, with
/// collinear boundary points removed.
pub fn convex_hull(points: &[Vec2]) -> Result<Vec<Vec2>, GeometryError> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return Err(GeometryError::DegenerateHull);
    }

    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && orientation(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len
            && orientation(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();

    if hull.len() < 3 {
        return Err(GeometryError::DegenerateHull);
    }
    Ok(hull)
}

/// Binary region mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoiMask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
    pub region_name: String,
    /// Set when the mask is the landmark bounding box rather than a hull.
    pub bounding_box_fallback: bool,
}

impl RoiMask {
    pub fn empty(width: usize, height: usize, region_name: &str) -> Self {
        Self {
            width,
            height,
            bits: alloc::vec![false; width * height],
            region_name: region_name.to_string(),
            bounding_box_fallback: false,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height && self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Set pixels as `(x, y)` in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }

    pub fn is_superset_of(&self, other: &RoiMask) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| a || !b)
    }

    /// Set pixels with at least one unset (or out-of-frame) 4-neighbour.
    pub fn boundary_pixels(&self) -> Vec<(usize, usize)> {
        self.pixels()
            .filter(|&(x, y)| {
                x == 0
                    || y == 0
                    || x + 1 >= self.width
                    || y + 1 >= self.height
                    || !self.get(x - 1, y)
                    || !self.get(x + 1, y)
                    || !self.get(x, y - 1)
                    || !self.get(x, y + 1)
            })
            .collect()
    }

    /// Mean pixel position of the set pixels.
    pub fn centroid(&self) -> Option<Vec2> {
        let mut sum = Vec2::ZERO;
        let mut n = 0usize;
        for (x, y) in self.pixels() {
            sum = sum + Vec2::new(x as f64, y as f64);
            n += 1;
        }
        (n > 0).then(|| sum * (1.0 / n as f64))
    }
}

/// Pixel index range `[lo, hi]` whose centres fall within `[min, max]`,
/// clipped to `[0, len)`.
fn covered_range(min: f64, max: f64, len: usize) -> Option<(usize, usize)> {
    let lo = ceil(min).max(0.0);
    let hi = floor(max).min(len as f64 - 1.0);
    (lo <= hi).then_some((lo as usize, hi as usize))
}

fn is_convex(polygon: &[Vec2]) -> bool {
    let n = polygon.len();
    let (mut pos, mut neg) = (false, false);
    for i in 0..n {
        let o = orientation(polygon[i], polygon[(i + 1) % n], polygon[(i + 2) % n]);
        pos |= o > 0.0;
        neg |= o < 0.0;
    }
    !(pos && neg)
}

fn on_segment(p: Vec2, a: Vec2, b: Vec2) -> bool {
    orientation(a, b, p) == 0.0
        && p.x >= a.x.min(b.x)
        && p.x <= a.x.max(b.x)
        && p.y >= a.y.min(b.y)
        && p.y <= a.y.max(b.y)
}

/// Non-zero winding test, boundary inclusive.
fn inside_winding(polygon: &[Vec2], p: Vec2) -> bool {
    let n = polygon.len();
    let mut winding = 0i32;
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[(i + 1) % n]);
        if on_segment(p, a, b) {
            return true;
        }
        if a.y <= p.y {
            if b.y > p.y && orientation(a, b, p) > 0.0 {
                winding += 1;
            }
        } else if b.y <= p.y && orientation(a, b, p) < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}

/// Fills `polygon` into a `width` x `height` mask. Parts of the polygon
/// outside the frame are clipped; an empty mask is a valid result.
pub fn rasterize_mask(polygon: &[Vec2], width: usize, height: usize, region_name: &str) -> RoiMask {
    let mut mask = RoiMask::empty(width, height, region_name);
    if polygon.len() < 3 || width == 0 || height == 0 {
        return mask;
    }
    let (mut minx, mut maxx) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut miny, mut maxy) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in polygon {
        minx = minx.min(p.x);
        maxx = maxx.max(p.x);
        miny = miny.min(p.y);
        maxy = maxy.max(p.y);
    }
    let (Some((x0, x1)), Some((y0, y1))) = (
        covered_range(minx, maxx, width),
        covered_range(miny, maxy, height),
    ) else {
        return mask;
    };

    let convex = is_convex(polygon);
    let n = polygon.len();
    // sign of the polygon's area decides which side of each edge is inside
    let area2: f64 = (0..n).map(|i| polygon[i].cross(polygon[(i + 1) % n])).sum();
    for y in y0..=y1 {
        for x in x0..=x1 {
            let p = Vec2::new(x as f64, y as f64);
            let inside = if convex {
                (0..n).all(|i| {
                    let o = orientation(polygon[i], polygon[(i + 1) % n], p);
                    if area2 >= 0.0 {
                        o >= 0.0
                    } else {
                        o <= 0.0
                    }
                })
            } else {
                inside_winding(polygon, p)
            };
            if inside {
                mask.set(x, y, true);
            }
        }
    }
    mask
}

/// Mask of the smallest integer-aligned box enclosing `points`.
pub fn bounding_box_mask(
    points: &[Vec2],
    width: usize,
    height: usize,
    region_name: &str,
) -> RoiMask {
    let mut mask = RoiMask::empty(width, height, region_name);
    mask.bounding_box_fallback = true;
    if points.is_empty() {
        return mask;
    }
    let minx = floor(points.iter().map(|p| p.x).fold(f64::INFINITY, f64::min));
    let maxx = ceil(points.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max));
    let miny = floor(points.iter().map(|p| p.y).fold(f64::INFINITY, f64::min));
    let maxy = ceil(points.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max));
    if let (Some((x0, x1)), Some((y0, y1))) = (
        covered_range(minx, maxx, width),
        covered_range(miny, maxy, height),
    ) {
        for y in y0..=y1 {
            for x in x0..=x1 {
                mask.set(x, y, true);
            }
        }
    }
    mask
}

/// Mask for a single region, falling back to the bounding box when the
/// region's landmarks have no proper hull.
pub fn region_mask(spec: &RoiSpec, landmarks: &LandmarkSet) -> RoiMask {
    let (w, h) = landmarks.frame_dims();
    let (w, h) = (w as usize, h as usize);
    let pts = spec.landmarks(landmarks);
    match convex_hull(&pts) {
        Ok(hull) => rasterize_mask(&hull, w, h, &spec.name),
        Err(_) => bounding_box_mask(&pts, w, h, &spec.name),
    }
}

/// One mask per catalog region, keyed by region name.
pub fn extract_rois(landmarks: &LandmarkSet, catalog: &RoiCatalog) -> BTreeMap<String, RoiMask> {
    catalog
        .regions
        .values()
        .map(|spec| (spec.name.clone(), region_mask(spec, landmarks)))
        .collect()
}
