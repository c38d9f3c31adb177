//! Global head-motion removal and gamma contrast correction.
//!
//! The flow sampled at the centroid of a small nose-tip landmark cluster
//! stands in for rigid head motion and is subtracted from every moving
//! pixel. Gamma correction then suppresses weak residual motion relative
//! to the strongest motion in the field without changing any direction.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::flow::{FlowError, FlowField, FlowVector};
use crate::geometry::{LandmarkSet, LANDMARK_COUNT};
use crate::math::{powf, Vec2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompensationParams {
    pub nose_indices: Vec<usize>,
    /// Raw magnitude at or below which a pixel is treated as static.
    pub epsilon: f64,
    pub gamma: f64,
}

impl Default for CompensationParams {
    fn default() -> Self {
        Self {
            nose_indices: alloc::vec![44, 51, 274, 281],
            epsilon: 1e-6,
            gamma: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CompensationError {
    InvalidParams(&'static str),
    CentroidOutOfBounds {
        centroid: Vec2,
        width: usize,
        height: usize,
    },
}

impl fmt::Display for CompensationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompensationError::InvalidParams(what) => {
                write!(f, "invalid compensation parameters: {what}")
            }
            CompensationError::CentroidOutOfBounds {
                centroid,
                width,
                height,
            } => write!(
                f,
                "nose centroid ({:.3}, {:.3}) lies outside the {width}x{height} flow field",
                centroid.x, centroid.y
            ),
        }
    }
}

impl core::error::Error for CompensationError {}

impl CompensationParams {
    pub fn validate(&self) -> Result<(), CompensationError> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(CompensationError::InvalidParams("epsilon must be > 0"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(CompensationError::InvalidParams("gamma must be > 0"));
        }
        if self.nose_indices.is_empty() {
            return Err(CompensationError::InvalidParams(
                "nose_indices must not be empty",
            ));
        }
        if self.nose_indices.iter().any(|&i| i >= LANDMARK_COUNT) {
            return Err(CompensationError::InvalidParams(
                "nose_indices must be < 468",
            ));
        }
        Ok(())
    }
}

/// Component-wise mean of the nose landmarks.
pub fn nose_centroid(landmarks: &LandmarkSet, params: &CompensationParams) -> Vec2 {
    let n = params.nose_indices.len() as f64;
    let sum = params
        .nose_indices
        .iter()
        .fold(Vec2::ZERO, |acc, &i| acc + landmarks.point(i));
    Vec2::new(sum.x / n, sum.y / n)
}

/// Subtracts the flow at the nose centroid from every pixel whose raw
/// magnitude exceeds `epsilon`; static pixels pass through untouched.
pub fn compensate(
    raw: &FlowField,
    landmarks: &LandmarkSet,
    params: &CompensationParams,
) -> Result<FlowField, CompensationError> {
    params.validate()?;
    let centroid = nose_centroid(landmarks, params);
    let reference = raw.bilinear_sample(centroid).map_err(|e| match e {
        FlowError::OutOfBounds { .. } => CompensationError::CentroidOutOfBounds {
            centroid,
            width: raw.width(),
            height: raw.height(),
        },
        _ => unreachable!("bilinear_sample only fails on bounds"),
    })?;
    Ok(subtract_reference(raw, reference, params.epsilon))
}

/// Compensation against an explicit reference vector.
pub fn subtract_reference(raw: &FlowField, reference: Vec2, epsilon: f64) -> FlowField {
    raw.map(|f| {
        if f.magnitude() > epsilon {
            FlowVector::from_vec2(f.to_vec2() - reference)
        } else {
            f
        }
    })
}

/// Power-law magnitude mapping on a magnitude already normalized to `[0, 1]`.
pub fn gamma_magnitude(normalized: f64, gamma: f64) -> f64 {
    powf(normalized, gamma)
}

/// Normalizes magnitudes by the field maximum, raises them to `gamma`
/// and scales back by the same maximum. Directions are unchanged; an
/// all-zero field is returned as is.
pub fn gamma_correct(field: &FlowField, params: &CompensationParams) -> FlowField {
    let max = field.max_magnitude();
    if max == 0.0 {
        return field.clone();
    }
    field.map(|f| {
        let m = f.magnitude();
        if m == 0.0 {
            return f;
        }
        let corrected = gamma_magnitude(m / max, params.gamma) * max;
        FlowVector::from_vec2(f.to_vec2() * (corrected / m))
    })
}
