mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;
use mer_cli::flo::{encode_flow, read_flow_file, write_flow_file};
use mer_cli::io::read_rgb;
use mer_cli::tables::builtin_table_files;
use mer_core::viz::{rgb_to_direction, HsvConvention};
use mer_core::{evidence::Direction8, FlowField, FlowVector};

fn mer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mer"))
        .args(args)
        .env_remove("MER_CONFIG")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

#[test]
fn regions_writes_every_mask() {
    let dir = tempfile::tempdir().unwrap();
    let o = mer(&[
        "regions",
        "--landmarks",
        s(&face_path()),
        "--width",
        "128",
        "--height",
        "128",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let pngs = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .path()
                .extension()
                .is_some_and(|x| x == "png")
        })
        .count();
    assert_eq!(pngs, 18);
    let cov: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("coverage.json")).unwrap()).unwrap();
    assert!(cov
        .as_object()
        .unwrap()
        .values()
        .all(|v| v["pixels"].as_u64().unwrap() > 0));
}

#[test]
fn regions_warns_on_degenerate_layout() {
    let dir = tempfile::tempdir().unwrap();
    let flat: Vec<[f64; 2]> = (0..468).map(|i| [(i % 100) as f64, 10.0]).collect();
    let lm = dir.path().join("flat.json");
    std::fs::write(&lm, serde_json::to_string(&flat).unwrap()).unwrap();
    let o = mer(&[
        "regions",
        "--landmarks",
        s(&lm),
        "--width",
        "128",
        "--height",
        "128",
        "--out",
        s(&dir.path().join("m")),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bounding_box_fallback"), "{err}");
}

#[test]
fn missing_input_is_a_contract_violation() {
    let o = mer(&[
        "regions",
        "--landmarks",
        "/no/such/file.json",
        "--width",
        "8",
        "--height",
        "8",
        "--out",
        "/tmp/unused",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["kind"], "input");
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    let o = mer(&["annotate"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["kind"], "usage");
    assert_eq!(mer(&["--help"]).status.code(), Some(0));
    let v = mer(&["--version"]);
    assert_eq!(v.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&v.stdout).contains("flow file: magic 202021.25"));
}

#[test]
fn flow_passthrough_and_estimation() {
    let dir = tempfile::tempdir().unwrap();
    let field =
        FlowField::from_fn(7, 5, |x, y| FlowVector::new(x as f32 * 0.5, -(y as f32))).unwrap();
    let src = dir.path().join("in.flo");
    write_flow_file(&src, &field).unwrap();
    let dst = dir.path().join("out.flo");
    assert_eq!(
        mer(&["flow", "--flo", s(&src), "--out", s(&dst)])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(std::fs::read(&dst).unwrap(), encode_flow(&field));

    let (a, _) = write_frames(dir.path(), "same", (0.0, 0.0));
    let est = dir.path().join("est.flo");
    let a = dir.path().join(a);
    let o = mer(&[
        "flow",
        "--frame-a",
        s(&a),
        "--frame-b",
        s(&a),
        "--out",
        s(&est),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(read_flow_file(&est).unwrap().max_magnitude() < 1e-3);

    assert_eq!(
        mer(&[
            "flow",
            "--flo",
            s(&src),
            "--frame-a",
            s(&a),
            "--out",
            s(&dst)
        ])
        .status
        .code(),
        Some(1)
    );
}

#[test]
fn viz_colors_follow_the_convention() {
    let dir = tempfile::tempdir().unwrap();
    let conv = HsvConvention::default();
    for (name, field, expect) in [
        (
            "up",
            FlowField::uniform(9, 9, FlowVector::new(0.0, -2.0)),
            Some(Direction8::Up),
        ),
        (
            "left",
            FlowField::uniform(9, 9, FlowVector::new(-2.0, 0.0)),
            Some(Direction8::Left),
        ),
        ("zero", FlowField::zeros(9, 9), None),
    ] {
        let f = dir.path().join(format!("{name}.flo"));
        write_flow_file(&f, &field).unwrap();
        let png = dir.path().join(format!("{name}.png"));
        assert_eq!(
            mer(&["viz", "--flow", s(&f), "--out", s(&png)])
                .status
                .code(),
            Some(0)
        );
        let img = read_rgb(&png).unwrap();
        assert_eq!((img.width, img.height), (9, 9));
        assert_eq!(rgb_to_direction(img.pixel(4, 4), &conv), expect, "{name}");
        if expect.is_none() {
            assert!(img.data.iter().all(|&c| c == 0));
        }
    }
    let legend = dir.path().join("legend.png");
    assert_eq!(
        mer(&["legend", "--size", "64", "--out", s(&legend)])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(read_rgb(&legend).unwrap().width, 64);
}

#[test]
fn annotate_isolates_failures() {
    let dir = tempfile::tempdir().unwrap();
    let samples: Vec<SampleSpec> = ten_samples().into_iter().take(2).collect();
    let manifest = write_manifest(dir.path(), &samples);
    let out = dir.path().join("out");
    let o = mer(&[
        "annotate",
        "--manifest",
        s(&manifest),
        "--out",
        s(&out),
        "--viz",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    for id in ["s01", "s02"] {
        assert!(out.join(format!("records/{id}.json")).exists());
        assert!(out.join(format!("viz/{id}.png")).exists());
    }
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["succeeded"], 2);

    // Break one sample's flow file: the other still succeeds, exit code 3.
    std::fs::write(dir.path().join("flows/s02.flo"), b"garbage").unwrap();
    let out2 = dir.path().join("out2");
    let o = mer(&["annotate", "--manifest", s(&manifest), "--out", s(&out2)]);
    assert_eq!(o.status.code(), Some(3));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out2.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["succeeded"], 1);
    assert_eq!(summary["failed"][0]["id"], "s02");
    assert!(out2.join("records/s01.json").exists());
    assert!(!out2.join("records/s02.json").exists());
}

#[test]
fn annotate_estimates_flow_from_frames() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(face_path(), dir.path().join("face.json")).unwrap();
    let (a, b) = write_frames(dir.path(), "f", (1.0, 0.0));
    let doc = serde_json::json!({"schema_version": 1, "samples": [{
        "id": "f", "source_dataset": "synthetic", "frames": [a, b],
        "landmarks_path": "face.json", "gt_aus": [4], "gt_emotion": "disgust"
    }]});
    let manifest = dir.path().join("m.json");
    std::fs::write(&manifest, doc.to_string()).unwrap();
    let out = dir.path().join("out");
    let o = mer(&["annotate", "--manifest", s(&manifest), "--out", s(&out)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rec: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("records/f.json")).unwrap()).unwrap();
    assert_eq!(rec["provenance"]["flow_source"], "estimated");
    assert_eq!(rec["provenance"]["frame_pair"], serde_json::json!([0, 1]));
}

#[test]
fn stats_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(dir.path(), &ten_samples());
    let o = mer(&["stats", "--manifest", s(&manifest), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let stats: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(stats["total"], 10);

    // Perfect predictions, taken from the ground truth.
    let preds: Vec<serde_json::Value> = ten_samples()
        .iter()
        .map(|s| serde_json::json!({"id": s.id, "emotion": s.emotion, "aus": s.aus}))
        .collect();
    let p = dir.path().join("preds.json");
    std::fs::write(&p, serde_json::to_string(&preds).unwrap()).unwrap();
    let o = mer(&[
        "eval",
        "--predictions",
        s(&p),
        "--manifest",
        s(&manifest),
        "--task",
        "emotion",
        "--json",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for k in ["acc", "uf1", "uar"] {
        assert_eq!(r["emotion"][k], 1.0, "{k}");
    }
    let o = mer(&[
        "eval",
        "--predictions",
        s(&p),
        "--manifest",
        s(&manifest),
        "--task",
        "au",
        "--json",
    ]);
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["au"]["per_au"]["AU4"]["f1"], 1.0);

    let o = mer(&[
        "eval",
        "--predictions",
        s(&p),
        "--manifest",
        s(&manifest),
        "--task",
        "emotion",
        "--exclude-source",
        "samm",
        "--json",
    ]);
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["samples"], 7);
    assert_eq!(r["unmatched_predictions"].as_array().unwrap().len(), 3);
    let o = mer(&[
        "eval",
        "--predictions",
        s(&p),
        "--manifest",
        s(&manifest),
        "--task",
        "emotion",
        "--filter-source",
        "mmew",
        "--json",
    ]);
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["samples"], 2);
}

#[test]
fn config_env_var_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[prompts]\nseed = 7\n").unwrap();
    let default_hash = mer(&["config", "hash"]).stdout;
    let o = Command::new(env!("CARGO_BIN_EXE_mer"))
        .args(["config", "show"])
        .env("MER_CONFIG", &cfg)
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&o.stdout).contains("seed = 7"));
    let env_hash = Command::new(env!("CARGO_BIN_EXE_mer"))
        .args(["config", "hash"])
        .env("MER_CONFIG", &cfg)
        .output()
        .unwrap()
        .stdout;
    assert_ne!(default_hash, env_hash);
    std::fs::write(&cfg, "[compensation]\ngamma = 0.0\n").unwrap();
    let o = mer(&["--config", s(&cfg), "config", "show"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_tables_match_builtins() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    for (name, text) in builtin_table_files() {
        assert_eq!(
            std::fs::read_to_string(data.join(name)).unwrap(),
            text,
            "{name} is stale; regenerate with `mer config dump-tables`"
        );
    }
}

#[test]
fn table_overrides_are_used() {
    let dir = tempfile::tempdir().unwrap();
    let mut pools: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(
            Path::new(env!("CARGO_MANIFEST_DIR")).join("data/instruction_pools.json"),
        )
        .unwrap(),
    )
    .unwrap();
    pools["emotion"] = serde_json::json!(["Only prompt."]);
    std::fs::write(dir.path().join("pools.json"), pools.to_string()).unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        "[tables]\ninstruction_pools = \"pools.json\"\n",
    )
    .unwrap();
    let manifest = write_manifest(dir.path(), &ten_samples()[..1]);
    let out = dir.path().join("out");
    let o = mer(&[
        "--config",
        s(&dir.path().join("c.toml")),
        "annotate",
        "--manifest",
        s(&manifest),
        "--out",
        s(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rec: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("records/s01.json")).unwrap()).unwrap();
    assert!(rec["prompts"]["emotion"]["input"]
        .as_str()
        .unwrap()
        .ends_with("[emotion] Only prompt."));
}
