use std::path::Path;
use std::process::{Command, Output};

use entromin::operators::make_srm;
use entromin::RandomSeed;

fn entromin(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entromin"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_xhat(dir: &Path) -> Vec<f64> {
    std::fs::read(dir.join("xhat.bin"))
        .unwrap()
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn missing_config_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = entromin(dir.path(), &["--config", "/nonexistent/entromin.json", "ptc"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn shape_flags_without_method_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = entromin(dir.path(), &["noisy", "--p", "0.7"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_generated_instance_with_sef() {
    let dir = tempfile::tempdir().unwrap();
    let out = entromin(dir.path(), &["--seed", "7", "solve", "--method", "sef"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let header = json(&dir.path().join("xhat.json"));
    let rel_err = header["rel_err"].as_f64().unwrap();
    assert!(rel_err < 1e-3, "rel_err {rel_err}");
    assert_eq!(read_xhat(dir.path()).len(), 200);
    assert_eq!(header["length"], 200);
    assert!(dir.path().join("trace.csv").exists());
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn zero_lambda_inverts_a_square_srm() {
    let dir = tempfile::tempdir().unwrap();
    let op = make_srm(64, 64, RandomSeed::new(11, 0)).unwrap();
    let x: Vec<f64> = (0..64).map(|i| (i as f64 * 0.3).sin()).collect();
    let y = op.apply(&x).unwrap();
    let op_path = dir.path().join("op.json");
    let y_path = dir.path().join("y.json");
    std::fs::write(&op_path, serde_json::to_string(&op.manifest().unwrap()).unwrap()).unwrap();
    std::fs::write(&y_path, serde_json::to_string(&y).unwrap()).unwrap();
    let out = entromin(
        dir.path(),
        &[
            "solve",
            "--method",
            "l1",
            "--lambda",
            "0",
            "--operator",
            op_path.to_str().unwrap(),
            "--input",
            y_path.to_str().unwrap(),
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let xhat = read_xhat(dir.path());
    let err: f64 = x.iter().zip(&xhat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let norm: f64 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    assert!(err / norm < 1e-6, "relative error {}", err / norm);
}

#[test]
fn wrong_measurement_length_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let op = make_srm(8, 16, RandomSeed::new(1, 0)).unwrap();
    let op_path = dir.path().join("op.json");
    let y_path = dir.path().join("y.json");
    std::fs::write(&op_path, serde_json::to_string(&op.manifest().unwrap()).unwrap()).unwrap();
    std::fs::write(&y_path, "[1.0, 2.0]").unwrap();
    let out = entromin(
        dir.path(),
        &["solve", "--operator", op_path.to_str().unwrap(), "--input", y_path.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn small_ptc_run_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.json");
    std::fs::write(&cfg, r#"{"n": 40, "sigmas": [0.3, 0.6], "rhos": [0.2, 0.6], "trials": 2}"#).unwrap();
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = entromin(&out_dir, &["--config", cfg.to_str().unwrap(), "--seed", "5", "ptc"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        ["results.csv", "rates.csv", "ptc.csv"].map(|f| std::fs::read(out_dir.join(f)).unwrap())
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    let results = String::from_utf8(a[0].clone()).unwrap();
    // 2 sigmas x 2 rhos x 2 trials x 4 methods, plus the header
    assert_eq!(results.lines().count(), 33);
}

#[test]
fn selftest_quick_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = entromin(dir.path(), &["selftest", "--quick"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(!String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn selftest_reports_injected_fault() {
    let dir = tempfile::tempdir().unwrap();
    let out = entromin(dir.path(), &["selftest", "--quick", "--inject-fault"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("shrinkage oracle"));
}
