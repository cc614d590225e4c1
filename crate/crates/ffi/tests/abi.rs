use std::ffi::{CStr, CString};
use std::ptr;

use solvkit_ffi::*;

fn model_json(name: &str) -> CString {
    let path = format!("{}/../core/models/{name}.json", env!("CARGO_MANIFEST_DIR"));
    CString::new(std::fs::read_to_string(path).unwrap()).unwrap()
}

fn load(name: &str) -> *mut SolvkitModel {
    let json = model_json(name);
    let mut m = ptr::null_mut();
    let code = unsafe { solvkit_model_from_json(json.as_ptr(), &mut m) };
    assert_eq!(code, SOLVKIT_OK, "{name}: {:?}", last_error());
    assert!(!m.is_null());
    m
}

fn last_error() -> Option<String> {
    let p = solvkit_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(solvkit_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn krawtchouk_energies() {
    let m = load("krawtchouk");
    let mut buf = [0.0; 5];
    let mut n = 0;
    let code = unsafe { solvkit_energies(m, 4, buf.as_mut_ptr(), buf.len(), &mut n) };
    assert_eq!(code, SOLVKIT_OK);
    assert_eq!(n, 5);
    assert_eq!(buf, [0.0, 1.0, 2.0, 3.0, 4.0]);
    unsafe { solvkit_model_free(m) };
}

#[test]
fn short_buffer_reports_needed_length() {
    let m = load("meixner");
    let mut buf = [0.0; 2];
    let mut n = 0;
    let code = unsafe { solvkit_energies(m, 6, buf.as_mut_ptr(), buf.len(), &mut n) };
    assert_eq!(code, SOLVKIT_BUFFER_TOO_SMALL);
    assert_eq!(n, 7);
    assert!(last_error().is_some());
    unsafe { solvkit_model_free(m) };
}

#[test]
fn energies_of_a_cubic_model_are_unsupported() {
    let m = load("cubic");
    let mut buf = [0.0; 4];
    let code = unsafe { solvkit_energies(m, 3, buf.as_mut_ptr(), buf.len(), ptr::null_mut()) };
    assert_eq!(code, SOLVKIT_UNSUPPORTED);
    unsafe { solvkit_model_free(m) };
}

#[test]
fn bad_json_is_invalid_input() {
    let json = CString::new("{ not json").unwrap();
    let mut m = ptr::null_mut();
    let code = unsafe { solvkit_model_from_json(json.as_ptr(), &mut m) };
    assert_eq!(code, SOLVKIT_INVALID_INPUT);
    assert!(m.is_null());
    assert!(last_error().is_some());
}

#[test]
fn null_arguments_are_reported() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { solvkit_model_from_json(ptr::null(), &mut m) }, SOLVKIT_NULL_ARGUMENT);
    let mut d = 0;
    assert_eq!(unsafe { solvkit_model_degree(ptr::null(), &mut d) }, SOLVKIT_NULL_ARGUMENT);
    unsafe {
        solvkit_model_free(ptr::null_mut());
        solvkit_string_free(ptr::null_mut());
    }
}

#[test]
fn verify_returns_a_json_report() {
    let m = load("krawtchouk");
    let checks = CString::new("closure,dual,casimir").unwrap();
    let mut out = ptr::null_mut();
    let code = unsafe { solvkit_verify(m, checks.as_ptr(), 5, &mut out) };
    assert_eq!(code, SOLVKIT_OK, "{:?}", last_error());
    let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_owned();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["status"], "PASS");
    assert_eq!(v["checks"].as_array().unwrap().len(), 3);
    unsafe {
        solvkit_string_free(out);
        solvkit_model_free(m);
    }
}

#[test]
fn verify_flags_a_tampered_certificate() {
    let m = load("krawtchouk-tampered");
    let checks = CString::new("closure").unwrap();
    let mut out = ptr::null_mut();
    let code = unsafe { solvkit_verify(m, checks.as_ptr(), 0, &mut out) };
    assert_eq!(code, SOLVKIT_CHECK_FAILED);
    assert!(!out.is_null());
    unsafe {
        solvkit_string_free(out);
        solvkit_model_free(m);
    }
}

#[test]
fn unknown_check_is_invalid_input() {
    let m = load("krawtchouk");
    let checks = CString::new("closure,bogus").unwrap();
    let mut out = ptr::null_mut();
    let code = unsafe { solvkit_verify(m, checks.as_ptr(), 0, &mut out) };
    assert_eq!(code, SOLVKIT_INVALID_INPUT);
    assert!(out.is_null());
    unsafe { solvkit_model_free(m) };
}

#[test]
fn qes_quartic_block() {
    let m = load("quartic");
    let mut d = 0;
    assert_eq!(unsafe { solvkit_model_degree(m, &mut d) }, SOLVKIT_OK);
    assert_eq!(d, 4);
    let (mut re, mut im) = ([0.0; 4], [0.0; 4]);
    let mut n = 0;
    let code = unsafe { solvkit_qes_eigenvalues(m, -1, re.as_mut_ptr(), im.as_mut_ptr(), 4, &mut n) };
    assert_eq!(code, SOLVKIT_OK, "{:?}", last_error());
    assert_eq!(n, 4);
    assert!(re.iter().all(|x| x.is_finite()));
    unsafe { solvkit_model_free(m) };
}

#[test]
fn quintic_is_unsupported() {
    let m = load("quintic");
    let (mut re, mut im) = ([0.0; 8], [0.0; 8]);
    let code = unsafe { solvkit_qes_eigenvalues(m, 2, re.as_mut_ptr(), im.as_mut_ptr(), 8, ptr::null_mut()) };
    assert_eq!(code, SOLVKIT_UNSUPPORTED, "{:?}", last_error());
    unsafe { solvkit_model_free(m) };
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(format!("{}/include/solvkit.h", env!("CARGO_MANIFEST_DIR"))).unwrap();
    for f in [
        "solvkit_version",
        "solvkit_last_error",
        "solvkit_model_from_json",
        "solvkit_model_free",
        "solvkit_model_degree",
        "solvkit_energies",
        "solvkit_verify",
        "solvkit_qes_eigenvalues",
        "solvkit_string_free",
        "typedef struct SolvkitModel SolvkitModel",
    ] {
        assert!(header.contains(f), "{f} missing from header");
    }
}
