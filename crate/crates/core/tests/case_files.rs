use std::path::Path;

use coopt::case::PreparedCase;
use coopt::io::{case_to_json, load_case, parse_case, save_case};
use coopt::samples;

fn bundled(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("cases").join(name)
}

#[test]
fn bundled_cases_load_and_prepare() {
    for name in ["case_a.json", "case_b.json", "case_c.json", "demo_24.json"] {
        let case = load_case(bundled(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(case.issues().is_empty(), "{name}");
        PreparedCase::new(case).unwrap();
    }
}

#[test]
fn json_round_trip_is_lossless() {
    for name in ["case_a.json", "case_b.json", "case_c.json", "demo_24.json"] {
        let case = load_case(bundled(name)).unwrap();
        let text = case_to_json(&case).unwrap();
        assert_eq!(parse_case(&text, Path::new(name)).unwrap(), case, "{name}");
    }
}

#[test]
fn small_cases_match_builders() {
    assert_eq!(load_case(bundled("case_a.json")).unwrap(), samples::case_a());
    assert_eq!(load_case(bundled("case_b.json")).unwrap(), samples::case_b());
    assert_eq!(load_case(bundled("case_c.json")).unwrap(), samples::case_c());
}

#[test]
fn save_then_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.json");
    save_case(&samples::case_a(), &path).unwrap();
    assert_eq!(load_case(&path).unwrap(), samples::case_a());
}

#[test]
fn malformed_files_are_rejected() {
    let origin = Path::new("bad.json");
    assert!(parse_case("{", origin).unwrap_err().is_input_error());
    let text = std::fs::read_to_string(bundled("case_a.json")).unwrap();
    let negative = text.replace("\"max_output\": 100.0", "\"max_output\": -5.0");
    assert_ne!(negative, text);
    assert!(parse_case(&negative, origin).unwrap_err().is_input_error());
    assert!(load_case("/nonexistent/case.json").unwrap_err().is_input_error());
}
