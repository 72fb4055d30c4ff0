use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use ppde_ffi::*;

fn last_error() -> String {
    let p = ppde_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn linear(knots: &[f64], values: &[f64]) -> *mut PpdePath {
    let mut p = ptr::null_mut();
    let s = unsafe {
        ppde_path_new(PpdePathKind::Linear, values.len() / knots.len(), knots.as_ptr(), knots.len(), values.as_ptr(), &mut p)
    };
    assert_eq!(s, PpdeStatus::Ok);
    p
}

fn functional(name: &str) -> *mut PpdeFunctional {
    let name = CString::new(name).unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { ppde_functional_new(name.as_ptr(), 1.0, 1, &mut f) }, PpdeStatus::Ok);
    f
}

#[test]
fn distance_matches_core() {
    let a = linear(&[0.0, 1.0], &[0.0, 1.0]);
    let b = linear(&[0.0], &[0.0]);
    let mut d = f64::NAN;
    unsafe {
        assert_eq!(ppde_distance(0.5, a, 0.25, b, 3.0, 1.0, &mut d), PpdeStatus::Ok);
        let want = ppde::path_space::pw_distance(
            0.5,
            &ppde::path_space::PwPath::linear(1, vec![0.0, 1.0], vec![0.0, 1.0]),
            0.25,
            &ppde::path_space::PwPath::zero(1),
            3.0,
            1.0,
        );
        assert_eq!(d, want);
        assert_eq!(ppde_distance(0.5, a, 0.5, a, 3.0, 1.0, &mut d), PpdeStatus::Ok);
        assert_eq!(d, 0.0);
        ppde_path_free(a);
        ppde_path_free(b);
    }
}

#[test]
fn path_eval_and_validation() {
    let p = linear(&[0.0, 1.0], &[0.0, 0.0, 2.0, -2.0]);
    let mut x = [0.0; 2];
    unsafe {
        assert_eq!(ppde_path_dim(p), 2);
        assert_eq!(ppde_path_eval(p, 0.5, x.as_mut_ptr(), 2), PpdeStatus::Ok);
        assert_eq!(x, [1.0, -1.0]);
        assert_eq!(ppde_path_eval(p, 0.5, x.as_mut_ptr(), 1), PpdeStatus::InvalidArgument);
        ppde_path_free(p);

        let mut q = ptr::null_mut();
        let k = [1.0, 0.5];
        let v = [0.0, 0.0];
        assert_eq!(ppde_path_new(PpdePathKind::Step, 1, k.as_ptr(), 2, v.as_ptr(), &mut q), PpdeStatus::InvalidArgument);
        assert!(q.is_null());
        assert!(last_error().contains("increasing"));
        assert_eq!(ppde_path_new(PpdePathKind::Step, 1, ptr::null(), 2, v.as_ptr(), &mut q), PpdeStatus::NullPointer);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let name = CString::new("no-such-functional").unwrap();
    let mut f = ptr::null_mut();
    let s = unsafe { ppde_functional_new(name.as_ptr(), 1.0, 1, &mut f) };
    assert_ne!(s, PpdeStatus::Ok);
    assert!(last_error().contains("no-such-functional"));

    let mut l = ptr::null_mut();
    assert_eq!(unsafe { ppde_lattice_new(1.0, 1.0, 0, 1, 3, 3, &mut l) }, PpdeStatus::Configuration);

    // a successful call clears the message
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { ppde_config_default(&mut c) }, PpdeStatus::Ok);
    assert!(ppde_last_error().is_null());
    unsafe { ppde_config_free(c) };
}

#[test]
fn functional_and_expectation() {
    let f = functional("heat");
    let omega = linear(&[0.0, 1.0], &[0.0, 3.0]);
    let mut v = f64::NAN;
    let mut l = ptr::null_mut();
    unsafe {
        assert_eq!(ppde_functional_eval(f, 1.0, omega, &mut v), PpdeStatus::Ok);
        assert!((v - 8.0).abs() < 1e-12);
        assert_eq!(ppde_lattice_new(1.0, 1.0, 4, 1, 3, 3, &mut l), PpdeStatus::Ok);
        let (mut hi, mut lo) = (f64::NAN, f64::NAN);
        assert_eq!(ppde_sup_expectation(l, f, PpdeMode::Sup, &mut hi), PpdeStatus::Ok);
        assert_eq!(ppde_sup_expectation(l, f, PpdeMode::Inf, &mut lo), PpdeStatus::Ok);
        assert!(lo < 0.0 && hi > 0.0, "{lo} {hi}");
        ppde_lattice_free(l);
        ppde_functional_free(f);
        ppde_path_free(omega);
    }
}

#[test]
fn regularization_brackets_the_functional() {
    let f = functional("soft-endpoint");
    let eta = linear(&[0.0, 1.0], &[0.0, 1.0]);
    let mut u = f64::NAN;
    let mut up = PpdeRegularization::default();
    let mut down = PpdeRegularization::default();
    unsafe {
        assert_eq!(ppde_functional_eval(f, 0.5, eta, &mut u), PpdeStatus::Ok);
        assert_eq!(ppde_regularize(f, 4.0, 0.5, eta, PpdeDirection::Sub, 3.0, 1.0, &mut up), PpdeStatus::Ok);
        assert_eq!(ppde_regularize(f, 4.0, 0.5, eta, PpdeDirection::Super, 3.0, 1.0, &mut down), PpdeStatus::Ok);
        assert!(up.value >= u - up.gap, "{} vs {u}", up.value);
        assert!(down.value <= u + down.gap, "{} vs {u}", down.value);
        assert!(up.evaluations > 0);
        assert_eq!(ppde_regularize(f, 0.5, 0.5, eta, PpdeDirection::Sub, 3.0, 1.0, &mut up), PpdeStatus::Domain);
        ppde_functional_free(f);
        ppde_path_free(eta);
    }
}

#[test]
fn control_value_lattice() {
    let name = CString::new("vol-control").unwrap();
    let mut v = PpdeValue::default();
    assert_eq!(unsafe { ppde_control_value(name.as_ptr(), 1.0, 0.0, 0.0, PpdeEngine::Lattice, 1, &mut v) }, PpdeStatus::Ok);
    assert!((v.value - 2.25).abs() < 0.05, "{}", v.value);
    assert_eq!(v.std_error, 0.0);
}

#[test]
fn config_diagnostics_and_run() {
    let mut c = ptr::null_mut();
    let bad = CString::new("seed = 1\np = 4\n").unwrap();
    assert_eq!(unsafe { ppde_config_parse(bad.as_ptr(), &mut c) }, PpdeStatus::Configuration);
    assert!(last_error().contains("line 2"), "{}", last_error());
    let junk = CString::new("seed = [\n").unwrap();
    assert_eq!(unsafe { ppde_config_parse(junk.as_ptr(), &mut c) }, PpdeStatus::Configuration);

    let good = CString::new("seed = 3\n").unwrap();
    assert_eq!(unsafe { ppde_config_parse(good.as_ptr(), &mut c) }, PpdeStatus::Ok);
    let suite = CString::new("step-inequality").unwrap();
    let mut json = ptr::null_mut();
    let mut passed = false;
    unsafe {
        assert_eq!(ppde_run(c, suite.as_ptr(), 1, &mut json, &mut passed), PpdeStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        ppde_string_free(json);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["seed"], 3);
        assert_eq!(v["passed"], passed);
        assert!(passed);
        let nope = CString::new("nope").unwrap();
        assert_eq!(ppde_run(c, nope.as_ptr(), 1, &mut json, ptr::null_mut()), PpdeStatus::Configuration);
        ppde_config_free(c);
    }
}

#[test]
fn null_handles_are_rejected() {
    let mut d = 0.0;
    unsafe {
        assert_eq!(ppde_distance(0.0, ptr::null(), 0.0, ptr::null(), 3.0, 1.0, &mut d), PpdeStatus::NullPointer);
        assert_eq!(ppde_path_dim(ptr::null()), 0);
        ppde_path_free(ptr::null_mut());
        ppde_functional_free(ptr::null_mut());
        ppde_string_free(ptr::null_mut());
    }
    assert!(!unsafe { CStr::from_ptr(ppde_version()) }.to_bytes().is_empty());
}

/// Compiles `tests/c/smoke.c` against the generated header and the static
/// library, then runs it.
#[test]
fn c_program_links_against_header() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/ppde.h");
    assert!(header.exists(), "header not generated");
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libppde_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let bin = tmp.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c11")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("cc");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
