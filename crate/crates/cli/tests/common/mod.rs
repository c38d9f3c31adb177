#![allow(dead_code)]

use std::path::{Path, PathBuf};

use mer_cli::flo::write_flow_file;
use mer_cli::io::{read_landmarks, write_gray};
use mer_core::geometry::extract_rois;
use mer_core::{builtin_roi_catalog, FlowField, FlowVector, GrayFrame, LandmarkSet};

pub const FRAME: u32 = 128;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn face_path() -> PathBuf {
    fixture("neutral_face.landmarks.json")
}

pub fn face() -> LandmarkSet {
    read_landmarks(&face_path(), (FRAME, FRAME), false).unwrap()
}

/// Zero flow except `vector` inside each named region's mask.
pub fn region_flow(landmarks: &LandmarkSet, moves: &[(&str, FlowVector)]) -> FlowField {
    let masks = extract_rois(landmarks, &builtin_roi_catalog());
    let (w, h) = (FRAME as usize, FRAME as usize);
    let mut v = vec![FlowVector::default(); w * h];
    for (region, vector) in moves {
        for (x, y) in masks[*region].pixels() {
            v[y * w + x] = *vector;
        }
    }
    FlowField::new(w, h, v).unwrap()
}

pub fn down(m: f32) -> FlowVector {
    FlowVector::new(0.0, m)
}

pub fn up(m: f32) -> FlowVector {
    FlowVector::new(0.0, -m)
}

/// A smooth textured frame, optionally shifted by whole pixels.
pub fn textured_frame(dx: f64, dy: f64) -> GrayFrame {
    GrayFrame::from_fn(FRAME as usize, FRAME as usize, |x, y| {
        let (x, y) = (x as f64 - dx, y as f64 - dy);
        (0.5 + 0.2 * (x * 0.31).sin() * (y * 0.23).cos() + 0.15 * ((x + 2.0 * y) * 0.11).sin())
            as f32
    })
}

pub struct SampleSpec {
    pub id: String,
    pub source: String,
    pub aus: Vec<u8>,
    pub emotion: String,
    pub flow: FlowField,
}

/// Writes flow files, a shared landmark file and the manifest into `dir`.
pub fn write_manifest(dir: &Path, samples: &[SampleSpec]) -> PathBuf {
    std::fs::create_dir_all(dir.join("flows")).unwrap();
    std::fs::copy(face_path(), dir.join("face.json")).unwrap();
    let mut entries = Vec::new();
    for s in samples {
        let rel = format!("flows/{}.flo", s.id);
        write_flow_file(&dir.join(&rel), &s.flow).unwrap();
        entries.push(serde_json::json!({
            "id": s.id,
            "source_dataset": s.source,
            "flow_path": rel,
            "landmarks_path": "face.json",
            "gt_aus": s.aus,
            "gt_emotion": s.emotion,
        }));
    }
    let path = dir.join("manifest.json");
    let doc = serde_json::json!({ "schema_version": 1, "samples": entries });
    std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    path
}

/// Writes two frames for an estimated-flow sample and returns their paths.
pub fn write_frames(dir: &Path, id: &str, shift: (f64, f64)) -> (String, String) {
    std::fs::create_dir_all(dir.join("frames")).unwrap();
    let a = format!("frames/{id}_0.png");
    let b = format!("frames/{id}_1.png");
    write_gray(&dir.join(&a), &textured_frame(0.0, 0.0)).unwrap();
    write_gray(&dir.join(&b), &textured_frame(shift.0, shift.1)).unwrap();
    (a, b)
}

/// Ten samples covering verified, contradicted and anomalous cases.
pub fn ten_samples() -> Vec<SampleSpec> {
    let lm = face();
    let spec = |id: &str, source: &str, aus: &[u8], emotion: &str, moves: &[(&str, FlowVector)]| {
        SampleSpec {
            id: id.into(),
            source: source.into(),
            aus: aus.to_vec(),
            emotion: emotion.into(),
            flow: region_flow(&lm, moves),
        }
    };
    vec![
        spec(
            "s01",
            "casme2",
            &[4],
            "disgust",
            &[
                ("left_full_eyebrow", down(10.0)),
                ("right_full_eyebrow", down(10.0)),
            ],
        ),
        spec(
            "s02",
            "casme2",
            &[1],
            "sadness",
            &[
                ("left_full_eyebrow", down(10.0)),
                ("right_full_eyebrow", down(10.0)),
            ],
        ),
        spec(
            "s03",
            "samm",
            &[4],
            "anger",
            &[
                ("left_full_eyebrow", down(8.0)),
                ("mouth", FlowVector::new(20.0, 0.0)),
            ],
        ),
        spec(
            "s04",
            "samm",
            &[12],
            "happiness",
            &[
                ("left_mouth_corner", FlowVector::new(-6.0, -6.0)),
                ("right_mouth_corner", FlowVector::new(6.0, -6.0)),
            ],
        ),
        spec(
            "s05",
            "casme3",
            &[6, 12],
            "happy",
            &[
                ("left_lower_eyelid", up(4.0)),
                ("left_mouth_corner", FlowVector::new(-5.0, -5.0)),
                ("right_mouth_corner", FlowVector::new(5.0, -5.0)),
            ],
        ),
        spec(
            "s06",
            "casme3",
            &[1, 2],
            "surprise",
            &[
                ("left_full_eyebrow", up(12.0)),
                ("right_full_eyebrow", up(12.0)),
            ],
        ),
        spec(
            "s07",
            "mmew",
            &[9],
            "disgust",
            &[
                ("left_nose", up(5.0)),
                ("right_nose", up(5.0)),
                ("left_eye_complete", down(18.0)),
            ],
        ),
        spec("s08", "mmew", &[17], "sadness", &[("chin", up(7.0))]),
        spec(
            "s09",
            "casme2",
            &[14],
            "repression",
            &[("left_mouth_corner", FlowVector::new(-4.0, 0.0))],
        ),
        spec("s10", "samm", &[], "others", &[]),
    ]
}
