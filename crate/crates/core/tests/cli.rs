use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("cases").join(name)
}

fn coopt(args: &[&str], case: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coopt"))
        .args(args)
        .arg("--case")
        .arg(case)
        .arg("--out-dir")
        .arg(out)
        .output()
        .unwrap()
}

fn read(path: PathBuf) -> String {
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn solve_writes_schedule_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = coopt(&["solve"], &bundled("case_b.json"), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let solution = read(dir.path().join("solution.csv"));
    let objective: f64 = solution
        .lines()
        .find(|l| l.starts_with("objective"))
        .and_then(|l| l.rsplit(',').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((objective - 522.0).abs() < 1e-6);
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path().join("manifest.json"))).unwrap();
    assert_eq!(manifest["command"], "solve");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);
    assert!(dir.path().join("duals.csv").exists() && dir.path().join("kkt.json").exists());
}

#[test]
fn price_and_settle_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let case = bundled("case_a.json");
    assert!(coopt(&["price"], &case, dir.path()).status.success());
    assert!(read(dir.path().join("prices.csv")).lines().count() > 1);
    assert!(dir.path().join("envelope.csv").exists());
    assert!(coopt(&["settle"], &case, dir.path()).status.success());
    for file in ["ledger.csv", "profit.csv", "surplus.csv"] {
        assert!(dir.path().join(file).exists(), "{file}");
    }
}

#[test]
fn compare_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let case = bundled("case_c.json");
    let args = ["compare", "--kappa-grid", "0:0.2:0.2", "--samples", "500", "--seed", "7"];
    assert!(coopt(&args, &case, a.path()).status.success());
    assert!(coopt(&args, &case, b.path()).status.success());
    let first = read(a.path().join("comparison.csv"));
    assert_eq!(first, read(b.path().join("comparison.csv")));
    assert!(first.starts_with("model,kappa,expected_cost"));
    assert_eq!(first.lines().count(), 1 + 1 + 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let tight = read(bundled("case_c.json")).replace("\"ramp_up\": 45.0", "\"ramp_up\": 30.0");
    let tight_path = dir.path().join("tight.json");
    std::fs::write(&tight_path, tight).unwrap();
    assert_eq!(coopt(&["solve"], &tight_path, dir.path()).status.code(), Some(1));

    let bad_path = dir.path().join("bad.json");
    std::fs::write(&bad_path, "{ not json").unwrap();
    let out = coopt(&["solve"], &bad_path, dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let out = coopt(&["compare", "--kappa-grid", "0:x"], &bundled("case_a.json"), dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_prints_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = coopt(&["validate"], &bundled("demo_24.json"), dir.path());
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("T = 24") && text.contains("K = 8"), "{text}");
}
