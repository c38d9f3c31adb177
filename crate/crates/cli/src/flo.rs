//! Binary flow files: little-endian `f32` magic 202021.25, `i32` width,
//! `i32` height, then row-major interleaved `(u, v)` `f32` pairs.

use std::fs;
use std::path::Path;

use mer_core::{FlowField, FlowVector};
use thiserror::Error;

pub const FLOW_MAGIC: f32 = 202021.25;
pub const HEADER_LEN: usize = 12;

#[derive(Debug, Error)]
pub enum FlowFileError {
    #[error("bad magic {0} (expected 202021.25)")]
    BadMagic(f32),
    #[error("non-positive dimensions {width}x{height}")]
    NonPositiveDims { width: i32, height: i32 },
    #[error("truncated flow file: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("{extra} unexpected bytes after the flow payload")]
    TrailingBytes { extra: usize },
    #[error("non-finite flow component at ({x}, {y})")]
    NonFinite { x: usize, y: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn le_f32(b: &[u8]) -> f32 {
    f32::from_le_bytes([b[0], b[1], b[2], b[3]])
}

fn le_i32(b: &[u8]) -> i32 {
    i32::from_le_bytes([b[0], b[1], b[2], b[3]])
}

pub fn decode_flow(bytes: &[u8]) -> Result<FlowField, FlowFileError> {
    if bytes.len() < 4 {
        return Err(FlowFileError::TruncatedPayload {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let magic = le_f32(&bytes[0..4]);
    if magic.to_bits() != FLOW_MAGIC.to_bits() {
        return Err(FlowFileError::BadMagic(magic));
    }
    if bytes.len() < HEADER_LEN {
        return Err(FlowFileError::TruncatedPayload {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let (width, height) = (le_i32(&bytes[4..8]), le_i32(&bytes[8..12]));
    if width <= 0 || height <= 0 {
        return Err(FlowFileError::NonPositiveDims { width, height });
    }
    let (w, h) = (width as usize, height as usize);
    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .unwrap_or(usize::MAX);
    if bytes.len() < expected {
        return Err(FlowFileError::TruncatedPayload {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(FlowFileError::TrailingBytes {
            extra: bytes.len() - expected,
        });
    }
    let mut vectors = Vec::with_capacity(w * h);
    for (i, chunk) in bytes[HEADER_LEN..].chunks_exact(8).enumerate() {
        let f = FlowVector::new(le_f32(&chunk[0..4]), le_f32(&chunk[4..8]));
        if !f.is_finite() {
            return Err(FlowFileError::NonFinite { x: i % w, y: i / w });
        }
        vectors.push(f);
    }
    Ok(FlowField::new(w, h, vectors).expect("validated above"))
}

pub fn encode_flow(field: &FlowField) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + field.vectors().len() * 8);
    out.extend_from_slice(&FLOW_MAGIC.to_le_bytes());
    out.extend_from_slice(&(field.width() as i32).to_le_bytes());
    out.extend_from_slice(&(field.height() as i32).to_le_bytes());
    for f in field.vectors() {
        out.extend_from_slice(&f.u.to_le_bytes());
        out.extend_from_slice(&f.v.to_le_bytes());
    }
    out
}

pub fn read_flow_file(path: &Path) -> Result<FlowField, FlowFileError> {
    decode_flow(&fs::read(path)?)
}

pub fn write_flow_file(path: &Path, field: &FlowField) -> Result<(), FlowFileError> {
    fs::write(path, encode_flow(field))?;
    Ok(())
}
