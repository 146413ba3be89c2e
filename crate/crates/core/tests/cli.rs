use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pwl_janossy::io::{load_certificate, to_json, Certificate};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pwl-janossy"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn witness_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("cert.json");
    let out = run(&["witness", "--k", "2", "--n", "4", "--seed", "7", "--out", path_str(&cert)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["verify", path_str(&cert)]);
    assert_eq!(out.status.code(), Some(0));

    // Moving the perturbation off the tuple-system null space must be caught.
    let mut doc = load_certificate(&cert).unwrap();
    let Certificate::Collision(c) = &mut doc.certificate else {
        panic!("expected a collision certificate");
    };
    c.delta[0] += 1e-3;
    fs::write(&cert, to_json(&doc).unwrap()).unwrap();
    let out = run(&["verify", path_str(&cert)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn rational_witness_in_two_dimensions() {
    let out = run(&["witness", "--k", "1", "--n", "3", "--dim", "2", "--rational"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"format_version\": 1"));
}

#[test]
fn encode_decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("points.json");
    let enc = dir.path().join("enc.json");
    fs::write(&input, "[[0.1, 0.2], [0.6, 0.9], [0.9, 0.1]]").unwrap();
    let out = run(&["encode", path_str(&input), "--out", path_str(&enc)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["decode", path_str(&enc)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut pts: Vec<Vec<f64>> = serde_json::from_slice(&out.stdout).unwrap();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let want = [[0.1, 0.2], [0.6, 0.9], [0.9, 0.1]];
    for (p, w) in pts.iter().zip(&want) {
        assert!((p[0] - w[0]).abs() < 1e-12 && (p[1] - w[1]).abs() < 1e-12, "{pts:?}");
    }
}

#[test]
fn bad_input_exits_with_error() {
    let out = run(&["verify", "/nonexistent/cert.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["witness", "--k", "3", "--n", "3"]);
    assert_eq!(out.status.code(), Some(2));
}
