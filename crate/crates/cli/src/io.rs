//! Landmark JSON and PNG raster IO.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use image::{GrayImage, ImageBuffer, Luma, Rgb};
use mer_core::viz::RgbImage;
use mer_core::{GrayFrame, LandmarkSet, RoiMask, Vec2};
use serde::Deserialize;

#[derive(Deserialize)]
#[serde(untagged)]
enum LandmarkFile {
    Points(Vec<Vec<f64>>),
    Wrapped { points: Vec<Vec<f64>> },
}

/// Reads a landmark file: a JSON array of `[x, y]` (or `[x, y, z]`)
/// entries, or an object with such an array under `"points"`.
pub fn read_landmarks(
    path: &Path,
    frame_dims: (u32, u32),
    normalized: bool,
) -> Result<LandmarkSet> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading landmarks {}", path.display()))?;
    parse_landmarks(&text, frame_dims, normalized)
        .with_context(|| format!("parsing landmarks {}", path.display()))
}

pub fn parse_landmarks(
    text: &str,
    frame_dims: (u32, u32),
    normalized: bool,
) -> Result<LandmarkSet> {
    let raw = match serde_json::from_str::<LandmarkFile>(text)? {
        LandmarkFile::Points(p) | LandmarkFile::Wrapped { points: p } => p,
    };
    let mut points = Vec::with_capacity(raw.len());
    for (i, p) in raw.iter().enumerate() {
        if p.len() < 2 || p.len() > 3 {
            bail!("landmark {i} has {} coordinates; expected 2 or 3", p.len());
        }
        points.push(Vec2::new(p[0], p[1]));
    }
    let set = if normalized {
        LandmarkSet::from_normalized(points, frame_dims)?
    } else {
        LandmarkSet::new(points, frame_dims)?
    };
    Ok(set)
}

pub fn write_landmarks(path: &Path, set: &LandmarkSet) -> Result<()> {
    let pts: Vec<[f64; 2]> = set.points().iter().map(|p| [p.x, p.y]).collect();
    fs::write(path, serde_json::to_string(&pts)? + "\n")?;
    Ok(())
}

/// Loads an image as 8-bit grayscale scaled to `[0, 1]`.
pub fn read_gray(path: &Path) -> Result<GrayFrame> {
    let img = image::open(path)
        .with_context(|| format!("reading image {}", path.display()))?
        .to_luma8();
    let (w, h) = img.dimensions();
    let data = img.pixels().map(|p| p.0[0] as f32 / 255.0).collect();
    Ok(GrayFrame::new(w as usize, h as usize, data)?)
}

pub fn write_gray(path: &Path, frame: &GrayFrame) -> Result<()> {
    let img: GrayImage = ImageBuffer::from_fn(frame.width as u32, frame.height as u32, |x, y| {
        let v = frame.data[y as usize * frame.width + x as usize];
        Luma([(v.clamp(0.0, 1.0) * 255.0).round() as u8])
    });
    img.save(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_rgb(path: &Path, img: &RgbImage) -> Result<()> {
    let buf: ImageBuffer<Rgb<u8>, Vec<u8>> =
        ImageBuffer::from_raw(img.width as u32, img.height as u32, img.data.clone())
            .context("image buffer size mismatch")?;
    buf.save(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// PNG bytes for an RGB image.
pub fn encode_rgb_png(img: &RgbImage) -> Result<Vec<u8>> {
    let mut out = std::io::Cursor::new(Vec::new());
    image::write_buffer_with_format(
        &mut out,
        &img.data,
        img.width as u32,
        img.height as u32,
        image::ExtendedColorType::Rgb8,
        image::ImageFormat::Png,
    )?;
    Ok(out.into_inner())
}

pub fn read_rgb(path: &Path) -> Result<RgbImage> {
    let img = image::open(path)
        .with_context(|| format!("reading image {}", path.display()))?
        .to_rgb8();
    let (w, h) = img.dimensions();
    Ok(RgbImage {
        width: w as usize,
        height: h as usize,
        data: img.into_raw(),
    })
}

/// Writes a mask as a black/white PNG.
pub fn write_mask(path: &Path, mask: &RoiMask) -> Result<()> {
    let img: GrayImage = ImageBuffer::from_fn(mask.width as u32, mask.height as u32, |x, y| {
        Luma([if mask.get(x as usize, y as usize) {
            255
        } else {
            0
        }])
    });
    img.save(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
