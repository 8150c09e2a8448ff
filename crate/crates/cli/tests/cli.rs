use std::path::{Path, PathBuf};
use std::process::Command;

use orbita_core::exterior::{label_resolver, parse_form};
use orbita_core::symcore::parse_expr;
use serde_json::Value;

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn orbita(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_orbita")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn check_round_trip(v: &Value) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                match (k.as_str(), x) {
                    ("expr", Value::String(s)) => {
                        let e = parse_expr(s).unwrap_or_else(|e| panic!("{s}: {e}"));
                        assert_eq!(&e.to_string(), s);
                    }
                    ("form", Value::String(s)) => {
                        let f = parse_form(s, &label_resolver(&["eta", "thetabar", "zeta"])).unwrap_or_else(|e| panic!("{s}: {e}"));
                        assert_eq!(&f.to_string(), s);
                    }
                    _ => check_round_trip(x),
                }
            }
        }
        Value::Array(items) => items.iter().for_each(check_round_trip),
        _ => {}
    }
}

#[test]
fn syzygies_of_translated_surfaces() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("syz.json");
    let (code, stdout, _) = orbita(&["syzygies", example("r3.orb").to_str().unwrap(), "--json", json.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("0 = ")).count(), 2, "{stdout}");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["seed"], 42);
    assert_eq!(v["syzygies"].as_array().unwrap().len(), 2);
    check_round_trip(&v);
}

#[test]
fn el_with_lagrangian_flag() {
    let (code, stdout, stderr) = orbita(&["el", example("se2.orb").to_str().unwrap(), "--lagrangian", "v^2/2"]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("A[1][eta[0]] = "), "{stdout}");
    assert!(stdout.contains("(v^3)*D[1,1,1]"), "{stdout}");
    assert!(stdout.contains("invariant Euler-Lagrange system for L = 1/2*v^2"));
}

#[test]
fn json_round_trips_for_every_command() {
    let dir = tempfile::tempdir().unwrap();
    for (file, cmds) in [("r3.orb", &["invariants", "syzygies", "conslaws", "el", "coframe"][..]), ("se2.orb", &["invariants", "coframe", "el"][..])] {
        for cmd in cmds {
            let json = dir.path().join(format!("{cmd}.json"));
            let (code, _, stderr) = orbita(&[cmd, example(file).to_str().unwrap(), "--json", json.to_str().unwrap()]);
            assert_eq!(code, 0, "{cmd} {file}: {stderr}");
            let v: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
            assert_eq!(v["command"], *cmd);
            check_round_trip(&v);
        }
    }
}

#[test]
fn identical_seeds_give_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str, seed: &str| {
        let json = dir.path().join(format!("{tag}.json"));
        let (code, stdout, _) = orbita(&["conslaws", example("r3.orb").to_str().unwrap(), "--seed", seed, "--json", json.to_str().unwrap()]);
        assert_eq!(code, 0);
        (stdout, std::fs::read(&json).unwrap())
    };
    let a = run("a", "7");
    let b = run("b", "7");
    assert_eq!(a, b);
    let c = run("c", "8");
    assert!(c.0.contains("seed 8"));
}

#[test]
fn corrupted_frame_fails_verification() {
    let text = std::fs::read_to_string(example("se2.orb")).unwrap();
    let bad = text.replace("c1 = -(x + u*u[1])", "c1 = (x + u*u[1])");
    assert_ne!(bad, text);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.orb");
    std::fs::write(&path, bad).unwrap();
    let (code, stdout, stderr) = orbita(&["verify", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stdout.contains("frame: FAILED: EquivarianceFailure"), "{stdout}");
    assert!(stderr.contains("verification failed"));
}

#[test]
fn parse_errors_exit_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.orb");
    std::fs::write(&path, "[base]\nk = 1\nq = 1\n\n[group]\nabelian = s\n[action]\nx = x\nu = u + * s\n").unwrap();
    let (code, _, stderr) = orbita(&["invariants", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("broken.orb:9:"), "{stderr}");
    let (code, _, stderr) = orbita(&["syzygies", "/nonexistent/file.orb"]);
    assert_eq!(code, 2, "{stderr}");
    let (code, _, _) = orbita(&["frobnicate", example("r3.orb").to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn missing_sections_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bare.orb");
    std::fs::write(&path, "[base]\nk = 1\nq = 1\n").unwrap();
    let (code, _, stderr) = orbita(&["syzygies", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("needs the [invariants] section"), "{stderr}");
}

#[test]
fn reconstruct_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("circle.csv");
    let (code, stdout, stderr) = orbita(&["reconstruct", example("se2.orb").to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("wrote 901 samples"));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut rows = text.lines();
    assert_eq!(rows.next().unwrap(), "x[1],u,u[1],\"u[1,1]\"");
    for row in rows {
        let f: Vec<f64> = row.split(',').map(|s| s.parse().unwrap()).collect();
        assert!((f[0] * f[0] + (f[1] - 1.0) * (f[1] - 1.0) - 1.0).abs() < 1e-6);
    }
}
