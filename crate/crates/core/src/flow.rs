//! Dense optical flow fields, sub-pixel sampling and a built-in estimator.
//!
//! The estimator is a coarse-to-fine Horn–Schunck scheme with image
//! warping: at each pyramid level the second frame is warped by the
//! current flow, the brightness-constancy residual is linearized, and a
//! Jacobi iteration solves for the update under a quadratic smoothness
//! penalty on the total flow.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::math::{ceil, exp, floor, Vec2};

/// One displacement vector, in pixels per frame. `v` grows downward.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FlowVector {
    pub u: f32,
    pub v: f32,
}

impl FlowVector {
    pub const ZERO: FlowVector = FlowVector { u: 0.0, v: 0.0 };

    pub const fn new(u: f32, v: f32) -> Self {
        Self { u, v }
    }

    pub fn to_vec2(self) -> Vec2 {
        Vec2::new(f64::from(self.u), f64::from(self.v))
    }

    pub fn from_vec2(v: Vec2) -> Self {
        Self {
            u: v.x as f32,
            v: v.y as f32,
        }
    }

    pub fn magnitude(self) -> f64 {
        self.to_vec2().norm()
    }

    pub fn is_finite(self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowError {
    NonPositiveDims {
        width: i64,
        height: i64,
    },
    LengthMismatch {
        expected: usize,
        found: usize,
    },
    NonFinite {
        x: usize,
        y: usize,
    },
    OutOfBounds {
        x: f64,
        y: f64,
    },
    DimMismatch {
        a: (usize, usize),
        b: (usize, usize),
    },
    InvalidParams(&'static str),
}

impl fmt::Display for FlowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowError::NonPositiveDims { width, height } => {
                write!(f, "flow dimensions {width}x{height} must be positive")
            }
            FlowError::LengthMismatch { expected, found } => {
                write!(f, "expected {expected} vectors, found {found}")
            }
            FlowError::NonFinite { x, y } => write!(f, "non-finite flow vector at ({x}, {y})"),
            FlowError::OutOfBounds { x, y } => {
                write!(f, "sample position ({x}, {y}) is outside the field")
            }
            FlowError::DimMismatch { a, b } => {
                write!(f, "frame sizes differ: {}x{} vs {}x{}", a.0, a.1, b.0, b.1)
            }
            FlowError::InvalidParams(what) => write!(f, "invalid estimator parameters: {what}"),
        }
    }
}

impl core::error::Error for FlowError {}

/// A `width` x `height` grid of flow vectors, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    vectors: Vec<FlowVector>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, vectors: Vec<FlowVector>) -> Result<Self, FlowError> {
        if width == 0 || height == 0 {
            return Err(FlowError::NonPositiveDims {
                width: width as i64,
                height: height as i64,
            });
        }
        if vectors.len() != width * height {
            return Err(FlowError::LengthMismatch {
                expected: width * height,
                found: vectors.len(),
            });
        }
        if let Some(i) = vectors.iter().position(|v| !v.is_finite()) {
            return Err(FlowError::NonFinite {
                x: i % width,
                y: i / width,
            });
        }
        Ok(Self {
            width,
            height,
            vectors,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "flow field must be at least 1x1");
        Self {
            width,
            height,
            vectors: alloc::vec![FlowVector::ZERO; width * height],
        }
    }

    pub fn uniform(width: usize, height: usize, value: FlowVector) -> Self {
        assert!(width > 0 && height > 0, "flow field must be at least 1x1");
        assert!(value.is_finite());
        Self {
            width,
            height,
            vectors: alloc::vec![value; width * height],
        }
    }

    /// Builds a field by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> FlowVector,
    ) -> Result<Self, FlowError> {
        let mut vectors = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                vectors.push(f(x, y));
            }
        }
        Self::new(width, height, vectors)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn vectors(&self) -> &[FlowVector] {
        &self.vectors
    }

    pub fn get(&self, x: usize, y: usize) -> FlowVector {
        self.vectors[y * self.width + x]
    }

    /// Applies `f` to every vector. `f` must keep components finite.
    pub fn map(&self, mut f: impl FnMut(FlowVector) -> FlowVector) -> Self {
        let vectors: Vec<FlowVector> = self.vectors.iter().map(|&v| f(v)).collect();
        debug_assert!(vectors.iter().all(|v| v.is_finite()));
        Self {
            width: self.width,
            height: self.height,
            vectors,
        }
    }

    pub fn max_magnitude(&self) -> f64 {
        self.vectors
            .iter()
            .map(|v| v.magnitude())
            .fold(0.0, f64::max)
    }

    /// Bilinear blend of the four grid vectors around `pos`.
    ///
    /// Integer positions return the grid value exactly.
    pub fn bilinear_sample(&self, pos: Vec2) -> Result<Vec2, FlowError> {
        let (w, h) = (self.width as f64, self.height as f64);
        if !(pos.x >= 0.0 && pos.y >= 0.0 && pos.x <= w - 1.0 && pos.y <= h - 1.0) {
            return Err(FlowError::OutOfBounds { x: pos.x, y: pos.y });
        }
        let x0 = floor(pos.x) as usize;
        let y0 = floor(pos.y) as usize;
        let tx = pos.x - x0 as f64;
        let ty = pos.y - y0 as f64;
        let x1 = if tx > 0.0 { x0 + 1 } else { x0 };
        let y1 = if ty > 0.0 { y0 + 1 } else { y0 };
        let a = self.get(x0, y0).to_vec2();
        let b = self.get(x1, y0).to_vec2();
        let c = self.get(x0, y1).to_vec2();
        let d = self.get(x1, y1).to_vec2();
        let top = a * (1.0 - tx) + b * tx;
        let bottom = c * (1.0 - tx) + d * tx;
        Ok(top * (1.0 - ty) + bottom * ty)
    }
}

/// Single-channel frame with intensities in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayFrame {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl GrayFrame {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self, FlowError> {
        if width == 0 || height == 0 {
            return Err(FlowError::NonPositiveDims {
                width: width as i64,
                height: height as i64,
            });
        }
        if data.len() != width * height {
            return Err(FlowError::LengthMismatch {
                expected: width * height,
                found: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    fn at(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        f64::from(self.data[cy * self.width + cx])
    }

    /// Bilinear lookup with edge clamping.
    fn sample(&self, x: f64, y: f64) -> f64 {
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = floor(x);
        let y0 = floor(y);
        let (tx, ty) = (x - x0, y - y0);
        let (x0, y0) = (x0 as isize, y0 as isize);
        let a = self.at(x0, y0);
        let b = self.at(x0 + 1, y0);
        let c = self.at(x0, y0 + 1);
        let d = self.at(x0 + 1, y0 + 1);
        (a * (1.0 - tx) + b * tx) * (1.0 - ty) + (c * (1.0 - tx) + d * tx) * ty
    }
}

/// Parameters of the built-in variational estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowEstimatorParams {
    /// Weight of the quadratic smoothness term, for intensities in `[0, 1]`.
    pub smoothness_weight: f64,
    /// Jacobi iterations per warp.
    pub iterations: usize,
    pub pyramid_levels: usize,
    /// Re-linearizations per pyramid level.
    pub warps: usize,
    /// Standard deviation of the Gaussian pre-smoothing, pixels. 0 disables.
    pub presmooth_sigma: f64,
}

impl Default for FlowEstimatorParams {
    fn default() -> Self {
        Self {
            smoothness_weight: 0.02,
            iterations: 150,
            pyramid_levels: 4,
            warps: 4,
            presmooth_sigma: 1.0,
        }
    }
}

impl FlowEstimatorParams {
    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.smoothness_weight > 0.0 && self.smoothness_weight.is_finite()) {
            return Err(FlowError::InvalidParams("smoothness_weight must be > 0"));
        }
        if self.iterations == 0 {
            return Err(FlowError::InvalidParams("iterations must be >= 1"));
        }
        if self.pyramid_levels == 0 {
            return Err(FlowError::InvalidParams("pyramid_levels must be >= 1"));
        }
        if self.warps == 0 {
            return Err(FlowError::InvalidParams("warps must be >= 1"));
        }
        if !(self.presmooth_sigma >= 0.0 && self.presmooth_sigma.is_finite()) {
            return Err(FlowError::InvalidParams("presmooth_sigma must be >= 0"));
        }
        Ok(())
    }
}

fn gaussian_blur(frame: &GrayFrame, sigma: f64) -> GrayFrame {
    if sigma <= 0.0 {
        return frame.clone();
    }
    let radius = ceil(3.0 * sigma) as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|i| exp(-((i * i) as f64) / (2.0 * sigma * sigma)))
        .collect();
    let norm: f64 = kernel.iter().sum();
    let (w, h) = (frame.width, frame.height);
    let mut tmp = GrayFrame {
        width: w,
        height: h,
        data: alloc::vec![0.0; w * h],
    };
    for y in 0..h {
        for x in 0..w {
            let s: f64 = kernel
                .iter()
                .enumerate()
                .map(|(k, wgt)| wgt * frame.at(x as isize + k as isize - radius, y as isize))
                .sum();
            tmp.data[y * w + x] = (s / norm) as f32;
        }
    }
    let mut out = GrayFrame {
        width: w,
        height: h,
        data: alloc::vec![0.0; w * h],
    };
    for y in 0..h {
        for x in 0..w {
            let s: f64 = kernel
                .iter()
                .enumerate()
                .map(|(k, wgt)| wgt * tmp.at(x as isize, y as isize + k as isize - radius))
                .sum();
            out.data[y * w + x] = (s / norm) as f32;
        }
    }
    out
}

/// Anti-aliased 2x2 box downsampling; odd trailing rows/columns are
/// folded in by clamping.
fn downsample(frame: &GrayFrame) -> GrayFrame {
    let frame = &gaussian_blur(frame, 1.0);
    let w = frame.width.div_ceil(2);
    let h = frame.height.div_ceil(2);
    GrayFrame::from_fn(w, h, |x, y| {
        let (sx, sy) = (2 * x as isize, 2 * y as isize);
        let s = frame.at(sx, sy)
            + frame.at(sx + 1, sy)
            + frame.at(sx, sy + 1)
            + frame.at(sx + 1, sy + 1);
        (s / 4.0) as f32
    })
}

struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: alloc::vec![0.0; width * height],
        }
    }

    #[inline]
    fn at(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    /// Horn–Schunck neighbourhood average (1/6 edge, 1/12 corner weights).
    fn local_mean(&self, x: usize, y: usize) -> f64 {
        let (x, y) = (x as isize, y as isize);
        (self.at(x - 1, y) + self.at(x + 1, y) + self.at(x, y - 1) + self.at(x, y + 1)) / 6.0
            + (self.at(x - 1, y - 1)
                + self.at(x + 1, y - 1)
                + self.at(x - 1, y + 1)
                + self.at(x + 1, y + 1))
                / 12.0
    }

    /// Bilinear upsampling to `width` x `height`, values multiplied by `scale`.
    fn resized(&self, width: usize, height: usize, scale: f64) -> Plane {
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        let mut out = Plane::zeros(width, height);
        for y in 0..height {
            for x in 0..width {
                let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (self.width - 1) as f64);
                let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (self.height - 1) as f64);
                let (x0, y0) = (floor(fx), floor(fy));
                let (tx, ty) = (fx - x0, fy - y0);
                let (x0, y0) = (x0 as isize, y0 as isize);
                let v = (self.at(x0, y0) * (1.0 - tx) + self.at(x0 + 1, y0) * tx) * (1.0 - ty)
                    + (self.at(x0, y0 + 1) * (1.0 - tx) + self.at(x0 + 1, y0 + 1) * tx) * ty;
                out.data[y * width + x] = v * scale;
            }
        }
        out
    }
}

/// Refines `(u, v)` at one pyramid level.
fn refine_level(
    a: &GrayFrame,
    b: &GrayFrame,
    u: &mut Plane,
    v: &mut Plane,
    params: &FlowEstimatorParams,
) {
    let (w, h) = (a.width, a.height);
    let alpha2 = params.smoothness_weight * params.smoothness_weight;
    let mut ix = alloc::vec![0.0f64; w * h];
    let mut iy = alloc::vec![0.0f64; w * h];
    let mut it = alloc::vec![0.0f64; w * h];
    for _ in 0..params.warps {
        // linearize around the current flow
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let (fx, fy) = (x as f64 + u.data[i], y as f64 + v.data[i]);
                let (xi, yi) = (x as isize, y as isize);
                let gax = (a.at(xi + 1, yi) - a.at(xi - 1, yi)) / 2.0;
                let gay = (a.at(xi, yi + 1) - a.at(xi, yi - 1)) / 2.0;
                let gbx = (b.sample(fx + 1.0, fy) - b.sample(fx - 1.0, fy)) / 2.0;
                let gby = (b.sample(fx, fy + 1.0) - b.sample(fx, fy - 1.0)) / 2.0;
                ix[i] = 0.5 * (gax + gbx);
                iy[i] = 0.5 * (gay + gby);
                it[i] = b.sample(fx, fy) - a.at(xi, yi);
            }
        }
        let u0 = u.data.clone();
        let v0 = v.data.clone();
        let mut next_u = Plane::zeros(w, h);
        let mut next_v = Plane::zeros(w, h);
        for _ in 0..params.iterations {
            for y in 0..h {
                for x in 0..w {
                    let i = y * w + x;
                    let ub = u.local_mean(x, y);
                    let vb = v.local_mean(x, y);
                    let residual = ix[i] * (ub - u0[i]) + iy[i] * (vb - v0[i]) + it[i];
                    let denom = alpha2 + ix[i] * ix[i] + iy[i] * iy[i];
                    next_u.data[i] = ub - ix[i] * residual / denom;
                    next_v.data[i] = vb - iy[i] * residual / denom;
                }
            }
            core::mem::swap(u, &mut next_u);
            core::mem::swap(v, &mut next_v);
        }
    }
}

/// Dense flow from `frame_a` to `frame_b`: a pixel at `p` in `frame_a`
/// is found at `p + flow(p)` in `frame_b`.
pub fn estimate_flow(
    frame_a: &GrayFrame,
    frame_b: &GrayFrame,
    params: &FlowEstimatorParams,
) -> Result<FlowField, FlowError> {
    params.validate()?;
    if frame_a.width != frame_b.width || frame_a.height != frame_b.height {
        return Err(FlowError::DimMismatch {
            a: (frame_a.width, frame_a.height),
            b: (frame_b.width, frame_b.height),
        });
    }
    let a0 = gaussian_blur(frame_a, params.presmooth_sigma);
    let b0 = gaussian_blur(frame_b, params.presmooth_sigma);
    let mut pyramid = alloc::vec![(a0, b0)];
    while pyramid.len() < params.pyramid_levels {
        let (a, b) = pyramid.last().expect("non-empty pyramid");
        if a.width < 16 || a.height < 16 {
            break;
        }
        let next = (downsample(a), downsample(b));
        pyramid.push(next);
    }

    let (cw, ch) = {
        let (a, _) = pyramid.last().expect("non-empty pyramid");
        (a.width, a.height)
    };
    let mut u = Plane::zeros(cw, ch);
    let mut v = Plane::zeros(cw, ch);
    for (a, b) in pyramid.iter().rev() {
        if u.width != a.width || u.height != a.height {
            let sx = a.width as f64 / u.width as f64;
            let sy = a.height as f64 / u.height as f64;
            u = u.resized(a.width, a.height, sx);
            v = v.resized(a.width, a.height, sy);
        }
        refine_level(a, b, &mut u, &mut v, params);
    }

    let vectors = u
        .data
        .iter()
        .zip(&v.data)
        .map(|(&du, &dv)| FlowVector::new(du as f32, dv as f32))
        .collect();
    FlowField::new(frame_a.width, frame_a.height, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn sample_at_grid_point_is_exact() {
        let field = FlowField::from_fn(5, 4, |x, y| {
            FlowVector::new(x as f32 * 1.5, -(y as f32) * 0.25)
        })
        .unwrap();
        let got = field.bilinear_sample(Vec2::new(3.0, 2.0)).unwrap();
        assert_eq!(got, field.get(3, 2).to_vec2());
        let corner = field.bilinear_sample(Vec2::new(4.0, 3.0)).unwrap();
        assert_eq!(corner, field.get(4, 3).to_vec2());
    }

    #[test]
    fn sample_midpoint_and_linear() {
        let field = FlowField::new(
            2,
            2,
            vec![
                FlowVector::new(1.0, 2.0),
                FlowVector::new(3.0, -2.0),
                FlowVector::new(5.0, 0.0),
                FlowVector::new(-1.0, 4.0),
            ],
        )
        .unwrap();
        assert_eq!(
            field.bilinear_sample(Vec2::new(0.5, 0.5)).unwrap(),
            Vec2::new(2.0, 1.0)
        );
        let line = FlowField::new(
            2,
            1,
            vec![FlowVector::new(0.0, 0.0), FlowVector::new(4.0, 0.0)],
        )
        .unwrap();
        assert_eq!(
            line.bilinear_sample(Vec2::new(0.25, 0.0)).unwrap(),
            Vec2::new(1.0, 0.0)
        );
    }

    #[test]
    fn sample_out_of_bounds() {
        let field = FlowField::zeros(3, 3);
        for p in [
            Vec2::new(-0.1, 0.0),
            Vec2::new(0.0, 2.01),
            Vec2::new(f64::NAN, 1.0),
        ] {
            assert!(matches!(
                field.bilinear_sample(p),
                Err(FlowError::OutOfBounds { .. })
            ));
        }
    }

    #[test]
    fn field_validation() {
        assert!(matches!(
            FlowField::new(0, 1, vec![]),
            Err(FlowError::NonPositiveDims { .. })
        ));
        assert!(matches!(
            FlowField::new(2, 1, vec![FlowVector::ZERO]),
            Err(FlowError::LengthMismatch { .. })
        ));
        let bad = vec![FlowVector::ZERO, FlowVector::new(f32::INFINITY, 0.0)];
        assert_eq!(
            FlowField::new(2, 1, bad),
            Err(FlowError::NonFinite { x: 1, y: 0 })
        );
    }

    #[test]
    fn estimator_rejects_mismatched_frames() {
        let a = GrayFrame::from_fn(8, 8, |_, _| 0.0);
        let b = GrayFrame::from_fn(8, 9, |_, _| 0.0);
        assert!(matches!(
            estimate_flow(&a, &b, &FlowEstimatorParams::default()),
            Err(FlowError::DimMismatch { .. })
        ));
    }

    #[test]
    fn identical_frames_give_zero_flow() {
        let a = GrayFrame::from_fn(32, 32, |x, y| ((x * 7 + y * 13) % 17) as f32 / 17.0);
        let field = estimate_flow(&a, &a, &FlowEstimatorParams::default()).unwrap();
        assert!(field.max_magnitude() < 1e-3);
    }
}
