use std::path::PathBuf;

use tubewave::harness::{self, GeometryConfig, Mode, Scenario, PRESETS};
use tubewave::wave3d::WaveGrid;
use tubewave::Error;

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tubewave-harness-{tag}-{}", std::process::id()));
    std::fs::remove_dir_all(&dir).ok();
    dir
}

fn config_path(err: Error) -> String {
    match err {
        Error::Config { path, .. } => path,
        other => panic!("expected a config error, got {other}"),
    }
}

#[test]
fn presets_round_trip_through_json() {
    for name in PRESETS {
        let s = Scenario::preset(name).unwrap();
        let back = Scenario::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.config_hash(), s.config_hash());
    }
    assert!(Scenario::preset("trumpet").is_none());
}

#[test]
fn config_errors_carry_field_paths() {
    let base = Scenario::preset("curved-bump").unwrap().to_json();
    let cases = [
        (base.replace("\"t_end\": 3.0", "\"t_end\": 0.0"), "t_end"),
        (base.replace("\"n_theta\": 12", "\"n_theta\": 4"), "grid"),
        (base.replace("\"density\": 1.0", "\"density\": -1.0"), "density"),
        // Tagged variants are buffered, so the path stops at the enum.
        (base.replace("\"radius\": 0.12", "\"radius\": \"wide\""), "geometry"),
        (base.replace("\"radius\": 0.12", "\"radius\": 0.0"), "geometry.radius"),
        (base.replace("\"mode\"", "\"colour\": 1, \"mode\""), "colour"),
        (
            base.replace("\"mode\": \"coupled-right-panel\"", "\"mode\": \"sideways\""),
            "mode",
        ),
        (
            base.replace("\"mode\"", "\"inject_forcing\": false, \"mode\""),
            "inject_forcing",
        ),
        (
            base.replace("\"coupled-right-panel\"", "\"certify\", \"inject_forcing\": true"),
            "inject_forcing",
        ),
        (base.replace("\"name\": \"curved-bump\"", "\"name\": \"../up\""), "name"),
    ];
    for (text, path) in cases {
        let err = Scenario::from_json(&text).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert_eq!(config_path(err), path, "{text}");
    }
}

#[test]
fn assumption_violations_are_separate_from_config_errors() {
    let mut s = Scenario::preset("curved-bump").unwrap();
    s.geometry = GeometryConfig::CurvedBump {
        radius: 0.12,
        kappa_max: 12.0,
    };
    let err = s.geometry().unwrap_err();
    assert!(matches!(err, Error::Assumption(_)));
    assert_eq!(err.exit_code(), 3);
    assert_eq!(harness::execute(&s).unwrap_err().exit_code(), 3);
}

#[test]
fn config_hash_tracks_every_field() {
    let a = Scenario::preset("cosine-horn").unwrap();
    let mut b = a.clone();
    b.snapshot_stride = 2;
    assert_ne!(a.config_hash(), b.config_hash());
    assert_eq!(a.config_hash().len(), 64);
}

#[test]
fn straight_certify_preset_is_trivial() {
    let s = Scenario::preset("straight-cylinder").unwrap();
    let out = harness::execute(&s).unwrap();
    let cert = out.certificate.unwrap();
    assert!(cert.lhs_total < 1e-12, "{}", cert.lhs_total);
    assert!(cert.bounds.thm2 < 1e-12);
    let peaks = out.summary.forcing_peaks.unwrap();
    assert!(peaks.f < 1e-12 && peaks.g < 1e-12 && peaks.h < 1e-12);
}

#[test]
fn run_directory_is_complete_and_deterministic() {
    let root = scratch_dir("run");
    let mut s = Scenario::preset("curved-bump").unwrap();
    s.mode = Mode::Certify;
    s.grid = WaveGrid::new(8, 4, 8).unwrap();
    s.t_end = 1.0;
    s.snapshot_stride = 3;
    let (dir, _) = harness::run_to_dir(&s, &root).unwrap();
    let read = |name: &str| std::fs::read(dir.join(name)).unwrap();
    let manifest: serde_json::Value = serde_json::from_slice(&read("manifest.json")).unwrap();
    assert_eq!(manifest["config_hash"], s.config_hash());
    let files = manifest["files"].as_array().unwrap();
    let names: Vec<&str> = files.iter().map(|f| f["path"].as_str().unwrap()).collect();
    for expected in ["signals.csv", "forcing.csv", "certificate.json"] {
        assert!(names.contains(&expected), "{names:?}");
    }
    let first: Vec<Vec<u8>> = names.iter().map(|n| read(n)).collect();
    for (f, bytes) in files.iter().zip(&first) {
        use sha2::{Digest, Sha256};
        assert_eq!(f["sha256"], hex::encode(Sha256::digest(bytes)));
        assert_eq!(f["bytes"], bytes.len());
    }
    let manifest_bytes = read("manifest.json");
    harness::run_to_dir(&s, &root).unwrap();
    for (n, bytes) in names.iter().zip(&first) {
        assert_eq!(&read(n), bytes, "{n} changed between identical runs");
    }
    assert_eq!(read("manifest.json"), manifest_bytes);
    std::fs::remove_dir_all(&root).ok();
}

#[test]
fn webster_sweep_on_straight_tube_is_second_order() {
    let mut s = Scenario::preset("straight-cylinder").unwrap();
    s.mode = Mode::WebsterOnly;
    s.grid = WaveGrid::new(64, 4, 8).unwrap();
    s.input.signal = tubewave::signals::Signal::gaussian(1.0, 0.5, 0.12);
    let rows = harness::sweep(&s, 3).unwrap();
    println!("{rows:#?}");
    for r in &rows[..2] {
        assert!(r.output_order >= 2.0 - 0.05, "{rows:#?}");
    }
    assert!(rows[2].output_error < rows[0].output_error);
}

#[test]
fn right_panel_sweep_tracking_error_decreases() {
    let mut s = Scenario::preset("curved-bump").unwrap();
    s.grid = WaveGrid::new(16, 4, 8).unwrap();
    s.t_end = 2.0;
    let root = scratch_dir("sweep");
    let (dir, rows) = harness::sweep_to_dir(&s, 2, &root).unwrap();
    println!("{rows:#?}");
    assert!(rows[0].tracking_order >= 1.0, "{rows:#?}");
    let text = std::fs::read_to_string(dir.join("convergence.csv")).unwrap();
    assert!(text.starts_with("level,n_s,n_r,n_theta,dt,output_error"));
    assert_eq!(text.lines().count(), 3);
    std::fs::remove_dir_all(&root).ok();
}

#[test]
fn sweep_rejects_a_single_level() {
    let s = Scenario::preset("straight-cylinder").unwrap();
    assert_eq!(config_path(harness::sweep(&s, 1).unwrap_err()), "levels");
}

#[test]
fn constants_listing_marks_provenance() {
    let s = Scenario::preset("straight-cylinder").unwrap();
    let exact = harness::exact_constants(&s).unwrap();
    let all = harness::constants(&s).unwrap();
    assert!(all.len() > exact.len());
    assert!(exact.iter().any(|c| c.name == "C_Omega"));
}
