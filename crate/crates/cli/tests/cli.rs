//! End-to-end runs of the `qws-lab` binary.

use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qws-lab"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn empty_guide_smatrix_is_pure_transmission() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run(&["preset", "empty", "empty.json"], tmp.path()).status.success());
    let path = tmp.path().join("empty.json");
    let mut file: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    file["k_over_piW"] = 3.5.into();
    std::fs::write(&path, file.to_string()).unwrap();
    let out = run(&["smatrix", "empty.json", "--resolution", "40", "--out", "s"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let mut reader = csv::Reader::from_path(tmp.path().join("s/smatrix.csv")).unwrap();
    let rows: Vec<(usize, usize, f64, f64)> = reader.deserialize().map(|r| r.unwrap()).collect();
    let dim = (rows.len() as f64).sqrt() as usize;
    assert_eq!(dim * dim, rows.len());
    let open = dim / 2;
    for (row, col, re, im) in rows {
        let norm = re.hypot(im);
        let transmitted = row == (col + open) % dim;
        assert!((norm - f64::from(u8::from(transmitted))).abs() < 1e-9, "({row},{col}) = {norm}");
    }
}

#[test]
fn manifest_hashes_match_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run(&["optimize-manip", "--nu", "1,49,1000", "--out", "m"], tmp.path()).status.success());
    let dir = tmp.path().join("m");
    let m = manifest(&dir);
    assert_eq!(m["command"], "optimize-manip");
    let artifacts = m["artifacts"].as_array().unwrap();
    assert!(!artifacts.is_empty());
    for a in artifacts {
        let bytes = std::fs::read(dir.join(a["path"].as_str().unwrap())).unwrap();
        assert_eq!(hex::encode(Sha256::digest(&bytes)), a["sha256"].as_str().unwrap());
    }

    let mut reader = csv::Reader::from_path(dir.join("manipulation.csv")).unwrap();
    let row49: Vec<f64> = reader
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect::<Vec<f64>>())
        .find(|r| r[0] == 49.0)
        .unwrap();
    assert!((row49[2] - 7.6543).abs() < 1e-3, "{row49:?}");
    assert!((row49[3] - 0.4997).abs() < 1e-3, "{row49:?}");
}

#[test]
fn scaling_is_deterministic_for_a_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |out: &'static str| ["scaling", "--seed", "7", "--nu", "1:100:log:5", "--modes", "8", "--out", out];
    assert!(run(&args("a"), tmp.path()).status.success());
    assert!(run(&args("b"), tmp.path()).status.success());
    let read = |d: &str| std::fs::read(tmp.path().join(d).join("scaling.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
}

#[test]
fn bad_inputs_exit_with_scenario_code() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = run(&["smatrix", "nope.json"], tmp.path());
    assert_eq!(missing.status.code(), Some(2));

    std::fs::write(tmp.path().join("bad.json"), "{ not json").unwrap();
    assert_eq!(run(&["gws", "bad.json"], tmp.path()).status.code(), Some(2));

    assert!(run(&["preset", "empty", "e.json"], tmp.path()).status.success());
    let noon = run(&["qfi", "e.json", "--resolution", "30", "--probe", "noon", "--nu", "2.5"], tmp.path());
    assert_eq!(noon.status.code(), Some(2), "{}", String::from_utf8_lossy(&noon.stderr));
}
