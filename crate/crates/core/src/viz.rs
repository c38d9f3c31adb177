//! HSV rendering of flow fields under the fixed direction-to-color
//! convention: hue encodes direction, value encodes magnitude relative to
//! the field maximum, saturation is always full.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::evidence::{screen_angle, Direction8};
use crate::flow::FlowField;
use crate::math::{floor, round, wrap, Vec2};

/// Hue (degrees) at each direction bin centre, in [`Direction8::ALL`] order.
pub const ANCHOR_HUES: [f64; 8] = [0.0, 315.0, 275.0, 240.0, 180.0, 120.0, 75.0, 30.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HsvConvention {
    pub anchor_hues: [f64; 8],
    /// Pixels with magnitude below this render black.
    pub epsilon: f64,
}

impl Default for HsvConvention {
    fn default() -> Self {
        Self {
            anchor_hues: ANCHOR_HUES,
            epsilon: 1e-6,
        }
    }
}

impl HsvConvention {
    /// Unwrapped anchor hues, decreasing from 360 at 0° to 0 at 360°.
    fn unwrapped(&self) -> [f64; 9] {
        let mut h = [0.0; 9];
        h[0] = if self.anchor_hues[0] == 0.0 {
            360.0
        } else {
            self.anchor_hues[0]
        };
        h[1..8].copy_from_slice(&self.anchor_hues[1..8]);
        h[8] = h[0] - 360.0;
        h
    }

    /// Hue for a screen angle, linearly interpolated between anchors.
    pub fn hue(&self, theta_deg: f64) -> f64 {
        let t = wrap(theta_deg, 360.0);
        let h = self.unwrapped();
        let seg = (floor(t / 45.0) as usize).min(7);
        let frac = (t - seg as f64 * 45.0) / 45.0;
        let hue = h[seg] + (h[seg + 1] - h[seg]) * frac;
        wrap(hue, 360.0)
    }

    /// Screen angle for a hue; the inverse of [`HsvConvention::hue`].
    pub fn angle_for_hue(&self, hue: f64) -> f64 {
        let h = self.unwrapped();
        let mut target = wrap(hue, 360.0);
        if target > h[0] {
            target -= 360.0;
        }
        for seg in 0..8 {
            let (hi, lo) = (h[seg], h[seg + 1]);
            if target <= hi && target >= lo {
                let frac = if hi == lo {
                    0.0
                } else {
                    (hi - target) / (hi - lo)
                };
                return (seg as f64 + frac) * 45.0 % 360.0;
            }
        }
        0.0
    }
}

/// 8-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn black(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: alloc::vec![0; width * height * 3],
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }
}

/// Standard HSV to RGB with components in `[0, 1]`, hue in degrees.
pub fn hsv_to_rgb(hue: f64, s: f64, v: f64) -> [u8; 3] {
    let h = wrap(hue, 360.0) / 60.0;
    let c = v * s;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match floor(h) as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let q = |ch: f64| round(((ch + m) * 255.0).clamp(0.0, 255.0)) as u8;
    [q(r), q(g), q(b)]
}

/// Hue in degrees of an RGB color, or `None` for grays (including black).
pub fn rgb_hue(rgb: [u8; 3]) -> Option<f64> {
    let [r, g, b] = rgb.map(|c| c as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let d = max - min;
    if d == 0.0 {
        return None;
    }
    let h = if max == r {
        wrap((g - b) / d, 6.0)
    } else if max == g {
        (b - r) / d + 2.0
    } else {
        (r - g) / d + 4.0
    };
    Some(h * 60.0)
}

/// Direction bin encoded by a rendered color.
pub fn rgb_to_direction(rgb: [u8; 3], convention: &HsvConvention) -> Option<Direction8> {
    rgb_hue(rgb).map(|h| Direction8::from_angle(convention.angle_for_hue(h)))
}

/// Renders a flow field; image dimensions equal field dimensions.
pub fn flow_to_image(field: &FlowField, convention: &HsvConvention) -> RgbImage {
    let mut img = RgbImage::black(field.width(), field.height());
    let max = field.max_magnitude();
    for y in 0..field.height() {
        for x in 0..field.width() {
            let f = field.get(x, y);
            let m = f.magnitude();
            if m < convention.epsilon || max == 0.0 {
                continue;
            }
            let hue = convention.hue(screen_angle(f.to_vec2()));
            img.put(x, y, hsv_to_rgb(hue, 1.0, m / max));
        }
    }
    img
}

/// Color-wheel legend: each pixel shows the color of a vector pointing
/// from the centre to that pixel, brightest at the rim; outside is black.
pub fn legend_image(size: usize, convention: &HsvConvention) -> RgbImage {
    let mut img = RgbImage::black(size, size);
    let c = (size as f64 - 1.0) / 2.0;
    let radius = size as f64 / 2.0;
    for y in 0..size {
        for x in 0..size {
            let v = Vec2::new(x as f64 - c, y as f64 - c);
            let r = v.norm();
            if r > radius || r < convention.epsilon {
                continue;
            }
            let hue = convention.hue(screen_angle(v));
            img.put(x, y, hsv_to_rgb(hue, 1.0, r / radius));
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::FlowVector;

    #[test]
    fn anchors_hit_exactly() {
        let conv = HsvConvention::default();
        for (i, d) in Direction8::ALL.iter().enumerate() {
            assert_eq!(conv.hue(d.center_deg()), ANCHOR_HUES[i], "{d}");
            assert!(
                (conv.angle_for_hue(ANCHOR_HUES[i]) - d.center_deg()).abs() < 1e-9,
                "{d}"
            );
        }
    }

    #[test]
    fn hue_is_cyclic_monotone() {
        let conv = HsvConvention::default();
        let mut prev = 360.0;
        for step in 1..3600 {
            let h = conv.hue(step as f64 / 10.0);
            assert!(h < prev || prev == 360.0 && h < 360.0, "step {step}");
            prev = h;
        }
    }

    #[test]
    fn hue_roundtrip() {
        let conv = HsvConvention::default();
        for step in 0..720 {
            let t = step as f64 / 2.0;
            let back = conv.angle_for_hue(conv.hue(t));
            let diff = wrap(back - t, 360.0);
            assert!(diff < 1e-9 || 360.0 - diff < 1e-9, "{t} -> {back}");
        }
    }

    #[test]
    fn named_colors() {
        let conv = HsvConvention::default();
        let up = flow_to_image(&FlowField::uniform(3, 3, FlowVector::new(0.0, -2.0)), &conv);
        let px = up.pixel(1, 1);
        assert!(px[0] > 100 && px[2] == 255 && px[1] == 0, "purple {px:?}");
        assert!(up.data.chunks(3).all(|c| c == px));
        let right = flow_to_image(&FlowField::uniform(3, 3, FlowVector::new(2.0, 0.0)), &conv);
        assert_eq!(right.pixel(0, 0), [255, 0, 0]);
        let zero = flow_to_image(&FlowField::zeros(3, 3), &conv);
        assert!(zero.data.iter().all(|&c| c == 0));
    }

    #[test]
    fn anchors_invert_after_quantization() {
        let conv = HsvConvention::default();
        for d in Direction8::ALL {
            let t = d.center_deg().to_radians();
            let field = FlowField::uniform(
                2,
                2,
                FlowVector::new(libm::cos(t) as f32, -libm::sin(t) as f32),
            );
            let img = flow_to_image(&field, &conv);
            assert_eq!(rgb_to_direction(img.pixel(0, 0), &conv), Some(d));
        }
    }

    #[test]
    fn brightness_tracks_magnitude() {
        let conv = HsvConvention::default();
        let field = FlowField::from_fn(8, 1, |x, _| FlowVector::new(x as f32, 0.0)).unwrap();
        let img = flow_to_image(&field, &conv);
        let reds: alloc::vec::Vec<u8> = (0..8).map(|x| img.pixel(x, 0)[0]).collect();
        assert!(reds.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(reds[0], 0);
        assert_eq!(reds[7], 255);
    }

    #[test]
    fn legend_top_is_purple() {
        let conv = HsvConvention::default();
        let img = legend_image(65, &conv);
        assert_eq!(
            rgb_to_direction(img.pixel(32, 2), &conv),
            Some(Direction8::Up)
        );
        assert_eq!(
            rgb_to_direction(img.pixel(62, 32), &conv),
            Some(Direction8::Right)
        );
        assert_eq!(img.pixel(0, 0), [0, 0, 0]);
    }
}
