use std::ffi::{CStr, CString};
use std::ptr;

use varex_ffi::*;

const LINEAR: &str = r#"
p1 = "2"
p2 = "2"
lambda = 1.0

[domain]
kind = "interval"
bounds = [0.0, 1.0]
resolution = [20]

[f]
kind = "custom"
exponent = "2"
value = "1"
primitive = "t"

[solver]
mode = "min"
"#;

fn last_error() -> String {
    let p = varex_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn new_problem(src: &str) -> (VarexStatus, *mut VarexProblem) {
    let c = CString::new(src).unwrap();
    let mut p = ptr::null_mut();
    let status = unsafe { varex_problem_new(c.as_ptr(), &mut p) };
    (status, p)
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(varex_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn linear_problem_round_trip() {
    let (status, p) = new_problem(LINEAR);
    assert_eq!(status, VarexStatus::Ok);
    let mut n = 0usize;
    assert_eq!(unsafe { varex_problem_num_nodes(p, &mut n) }, VarexStatus::Ok);
    assert_eq!(n, 21);

    let mut nodes = vec![0.0; 2 * n];
    assert_eq!(unsafe { varex_problem_nodes(p, nodes.as_mut_ptr(), nodes.len()) }, VarexStatus::Ok);
    assert_eq!(nodes[0], 0.0);
    assert!((nodes[2 * (n - 1)] - 1.0).abs() < 1e-15);

    // Both exponent terms contribute c^2/2, so phi(c) = c^2 - c with minimiser 0.5.
    let u = vec![0.5; n];
    let mut phi = 0.0;
    assert_eq!(unsafe { varex_energy(p, u.as_ptr(), n, &mut phi) }, VarexStatus::Ok);
    assert!((phi + 0.25).abs() < 1e-12, "phi = {phi}");
    let mut res = 1.0;
    assert_eq!(unsafe { varex_residual(p, u.as_ptr(), n, &mut res) }, VarexStatus::Ok);
    assert!(res < 1e-12, "residual = {res}");
    let mut grad = vec![1.0; n];
    assert_eq!(unsafe { varex_gradient(p, u.as_ptr(), n, grad.as_mut_ptr(), n) }, VarexStatus::Ok);
    assert!(grad.iter().all(|g| g.abs() < 1e-12));

    let mut x = 0.0;
    let ones = vec![1.0; n];
    assert_eq!(unsafe { varex_x_norm(p, ones.as_ptr(), n, &mut x) }, VarexStatus::Ok);
    // Constant field: zero gradient seminorm, so only the Lebesgue parts remain.
    assert!(x > 0.0 && x.is_finite());

    let mut report = ptr::null_mut();
    assert_eq!(unsafe { varex_solve(p, &mut report) }, VarexStatus::Ok);
    assert_eq!(unsafe { varex_report_exit_code(report) }, 0);
    let mut len = 0usize;
    assert_eq!(unsafe { varex_report_solution_len(report, &mut len) }, VarexStatus::Ok);
    assert_eq!(len, n);
    let mut sol = vec![0.0; len];
    assert_eq!(unsafe { varex_report_solution(report, sol.as_mut_ptr(), len) }, VarexStatus::Ok);
    assert!(sol.iter().all(|s| (s - 0.5).abs() < 1e-8));
    let json = unsafe { CStr::from_ptr(varex_report_json(report)) }.to_str().unwrap();
    let parsed: serde_json::Value = serde_json::from_str(json).unwrap();
    assert_eq!(parsed["mode"], "min");
    assert!(!unsafe { CStr::from_ptr(varex_report_summary(report)) }.to_bytes().is_empty());

    unsafe {
        varex_report_free(report);
        varex_problem_free(p);
    }
}

#[test]
fn bad_config_sets_last_error() {
    let (status, p) = new_problem("p1 = 2\n");
    assert_eq!(status, VarexStatus::Config);
    assert!(p.is_null());
    assert!(last_error().contains("p1"), "{}", last_error());
}

#[test]
fn exponent_below_one_is_a_precondition_failure() {
    let (status, _) = new_problem(&LINEAR.replace("p1 = \"2\"", "p1 = \"0.9\""));
    assert_eq!(status, VarexStatus::Precondition);
}

#[test]
fn null_and_length_errors() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { varex_problem_new(ptr::null(), &mut p) }, VarexStatus::NullPointer);
    let mut n = 0usize;
    assert_eq!(unsafe { varex_problem_num_nodes(ptr::null(), &mut n) }, VarexStatus::NullPointer);

    let (_, p) = new_problem(LINEAR);
    let short = [0.0; 3];
    let mut phi = 0.0;
    assert_eq!(unsafe { varex_energy(p, short.as_ptr(), 3, &mut phi) }, VarexStatus::LengthMismatch);
    assert!(last_error().contains("21"));
    let u = vec![0.0; 21];
    let mut out = [0.0; 4];
    assert_eq!(
        unsafe { varex_gradient(p, u.as_ptr(), 21, out.as_mut_ptr(), out.len()) },
        VarexStatus::LengthMismatch
    );
    assert_eq!(unsafe { varex_report_exit_code(ptr::null()) }, -1);
    assert!(unsafe { varex_report_json(ptr::null()) }.is_null());
    unsafe {
        varex_problem_free(p);
        varex_problem_free(ptr::null_mut());
        varex_report_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/varex.h");
    for name in [
        "varex_version",
        "varex_last_error",
        "varex_problem_new",
        "varex_problem_free",
        "varex_problem_num_nodes",
        "varex_problem_nodes",
        "varex_energy",
        "varex_gradient",
        "varex_residual",
        "varex_x_norm",
        "varex_solve",
        "varex_report_free",
        "varex_report_exit_code",
        "varex_report_json",
        "varex_report_summary",
        "varex_report_solution_len",
        "varex_report_solution",
        "VAREX_STATUS_LENGTH_MISMATCH",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
