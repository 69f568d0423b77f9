use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use coopt_ffi::*;

fn case_json(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/cases").join(name);
    std::fs::read_to_string(path).unwrap()
}

fn load(json: &str) -> (CooptStatus, *mut CooptCase) {
    let text = CString::new(json).unwrap();
    let mut case = ptr::null_mut();
    let status = unsafe { coopt_case_from_json(text.as_ptr(), &mut case) };
    (status, case)
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(coopt_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn case_b_round_trip() {
    let (status, case) = load(&case_json("case_b.json"));
    assert_eq!(status, CooptStatus::Ok);
    unsafe {
        assert_eq!(coopt_case_periods(case), 1);
        assert_eq!(coopt_case_generators(case), 1);
        assert_eq!(coopt_case_loads(case), 1);
        assert_eq!(coopt_case_scenarios(case), 1);
        let mut eps0 = 0.0;
        assert_eq!(coopt_case_base_probability(case, &mut eps0), CooptStatus::Ok);
        assert!((eps0 - 0.9).abs() < 1e-12);

        let mut sol = ptr::null_mut();
        assert_eq!(coopt_solve(case, &mut sol), CooptStatus::Ok);
        assert!(coopt_solution_kkt_passed(sol));
        let mut objective = 0.0;
        assert_eq!(coopt_solution_objective(sol, &mut objective), CooptStatus::Ok);
        assert!((objective - 522.0).abs() < 1e-7);

        let mut schedule = [0.0; 3];
        assert_eq!(coopt_solution_schedule(sol, 0, 0, schedule.as_mut_ptr()), CooptStatus::Ok);
        assert!((schedule[0] - 50.0).abs() < 1e-7 && (schedule[1] - 10.0).abs() < 1e-7 && schedule[2].abs() < 1e-7);

        let mut prices = CooptGeneratorPrices { energy: 0.0, reserve_up: 0.0, reserve_down: 0.0 };
        assert_eq!(coopt_generator_prices(sol, 0, 0, &mut prices), CooptStatus::Ok);
        assert!((prices.energy - 10.0).abs() < 1e-6);
        assert!((prices.reserve_up - 1.0).abs() < 1e-6);
        let mut load_price = 0.0;
        assert_eq!(coopt_load_price(sol, 0, 0, &mut load_price), CooptStatus::Ok);
        assert!((load_price - 10.0).abs() < 1e-6);

        let mut surplus = 1.0;
        assert_eq!(coopt_expected_surplus(case, sol, &mut surplus), CooptStatus::Ok);
        assert!(surplus.abs() < 1e-9);
        let mut profit = 1.0;
        assert_eq!(coopt_generator_profit(case, sol, 0, &mut profit), CooptStatus::Ok);
        assert!(profit.abs() < 1e-9);

        let mut summary = CooptSimulationSummary {
            samples: 0,
            mean_cost: 0.0,
            cost_std_error: 0.0,
            mean_net_revenue: 0.0,
            net_revenue_std_error: 0.0,
            expected_cost: 0.0,
        };
        assert_eq!(coopt_simulate(case, sol, 2000, 5, &mut summary), CooptStatus::Ok);
        assert_eq!(summary.samples, 2000);
        assert!((summary.expected_cost - 522.0).abs() < 1e-9);
        assert!((summary.mean_cost - 522.0).abs() <= 3.0 * summary.cost_std_error);

        coopt_solution_free(sol);
        coopt_case_free(case);
    }
}

#[test]
fn null_and_range_errors() {
    unsafe {
        let mut case = 8usize as *mut CooptCase;
        assert_eq!(coopt_case_from_json(ptr::null(), &mut case), CooptStatus::NullPointer);
        assert!(case.is_null());
        assert!(!last_error().is_empty());
        let text = CString::new("{}").unwrap();
        assert_eq!(coopt_case_from_json(text.as_ptr(), ptr::null_mut()), CooptStatus::NullPointer);
        assert_eq!(coopt_solve(ptr::null(), &mut ptr::null_mut()), CooptStatus::NullPointer);

        // freeing null is a no-op
        coopt_case_free(ptr::null_mut());
        coopt_solution_free(ptr::null_mut());

        let (_, case) = load(&case_json("case_a.json"));
        let mut sol = ptr::null_mut();
        assert_eq!(coopt_solve(case, &mut sol), CooptStatus::Ok);
        let mut price = 0.0;
        assert_eq!(coopt_load_price(sol, 1, 0, &mut price), CooptStatus::OutOfRange);
        assert!(last_error().contains("period"), "{}", last_error());
        assert_eq!(coopt_load_price(sol, 0, 3, &mut price), CooptStatus::OutOfRange);
        assert_eq!(coopt_solution_schedule(sol, 0, 0, ptr::null_mut()), CooptStatus::NullPointer);
        coopt_solution_free(sol);
        coopt_case_free(case);
    }
}

#[test]
fn input_and_infeasible_statuses() {
    let (status, case) = load("{ not json");
    assert_eq!(status, CooptStatus::InputError);
    assert!(case.is_null());

    let bad = case_json("case_a.json").replace("\"max_output\": 100.0", "\"max_output\": \"lots\"");
    assert_eq!(load(&bad).0, CooptStatus::InputError);
    assert!(last_error().contains("max_output"), "{}", last_error());

    let tight = case_json("case_c.json").replace("\"ramp_up\": 45.0", "\"ramp_up\": 30.0");
    let (status, case) = load(&tight);
    assert_eq!(status, CooptStatus::Ok);
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { coopt_solve(case, &mut sol) }, CooptStatus::Infeasible);
    assert!(sol.is_null());
    unsafe { coopt_case_free(case) };

    let bytes = [0x7bu8, 0xff, 0x7d, 0];
    let mut out = ptr::null_mut();
    let status = unsafe { coopt_case_from_json(bytes.as_ptr().cast(), &mut out) };
    assert_eq!(status, CooptStatus::InvalidUtf8);
}

#[test]
fn load_from_file() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/cases/demo_24.json");
    let path = CString::new(path.to_str().unwrap()).unwrap();
    let mut case = ptr::null_mut();
    unsafe {
        assert_eq!(coopt_case_from_file(path.as_ptr(), &mut case), CooptStatus::Ok);
        assert_eq!(coopt_case_periods(case), 24);
        assert_eq!(coopt_case_scenarios(case), 8);
        coopt_case_free(case);
        let missing = CString::new("/nonexistent/case.json").unwrap();
        assert_eq!(coopt_case_from_file(missing.as_ptr(), &mut case), CooptStatus::InputError);
    }
}

#[test]
fn static_strings() {
    let version = unsafe { CStr::from_ptr(coopt_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
    for status in [CooptStatus::Ok, CooptStatus::Infeasible, CooptStatus::OutOfRange] {
        let msg = unsafe { CStr::from_ptr(coopt_status_message(status)) };
        assert!(!msg.to_bytes().is_empty());
    }
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/coopt.h")
}

#[test]
fn header_declares_every_export() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "coopt_case_from_json",
        "coopt_case_from_file",
        "coopt_case_free",
        "coopt_solve",
        "coopt_solution_free",
        "coopt_solution_objective",
        "coopt_generator_prices",
        "coopt_load_price",
        "coopt_expected_surplus",
        "coopt_generator_profit",
        "coopt_simulate",
        "coopt_last_error",
        "coopt_status_message",
        "coopt_version",
        "COOPT_STATUS_INFEASIBLE",
        "typedef struct CooptCase CooptCase",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Some(cc) = ["cc", "gcc", "clang"].into_iter().find(|c| Command::new(c).arg("--version").output().is_ok()) else {
        eprintln!("no C compiler found; header compile check not run");
        return;
    };
    let dir = std::env::temp_dir().join(format!("coopt-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let source = dir.join("use_header.c");
    std::fs::write(
        &source,
        r#"#include "coopt.h"
int run(const char *json) {
    CooptCase *c = NULL;
    CooptSolution *s = NULL;
    double objective = 0.0;
    CooptGeneratorPrices p;
    if (coopt_case_from_json(json, &c) != COOPT_STATUS_OK) return 1;
    if (coopt_solve(c, &s) != COOPT_STATUS_OK) { coopt_case_free(c); return 2; }
    coopt_solution_objective(s, &objective);
    coopt_generator_prices(s, 0, 0, &p);
    coopt_solution_free(s);
    coopt_case_free(c);
    return objective > 0.0 && p.energy > 0.0 ? 0 : 3;
}
"#,
    )
    .unwrap();
    let output = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-c", "-o"])
        .arg(dir.join("use_header.o"))
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&source)
        .output()
        .unwrap();
    std::fs::remove_dir_all(&dir).ok();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
}
