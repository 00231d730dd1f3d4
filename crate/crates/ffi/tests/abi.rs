use std::ffi::{CStr, CString};
use std::ptr;

use hjf_ffi::*;

fn last_error() -> String {
    let p = hjf_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn ring_norm() {
    let s = CString::new("1+1*w@-4").unwrap();
    let mut n = 0i64;
    assert_eq!(unsafe { hjf_ring_norm(s.as_ptr(), &mut n) }, HjfStatus::Ok);
    assert_eq!(n, 2);
    assert!(hjf_last_error().is_null());

    let bad = CString::new("1+1*w@-5").unwrap();
    assert_eq!(unsafe { hjf_ring_norm(bad.as_ptr(), &mut n) }, HjfStatus::Parse);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { hjf_ring_norm(ptr::null(), &mut n) }, HjfStatus::NullPointer);
    assert_eq!(unsafe { hjf_ring_norm(s.as_ptr(), ptr::null_mut()) }, HjfStatus::NullPointer);
}

#[test]
fn delta_coefficients_and_hecke() {
    let spec = CString::new("1^24").unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { hjf_eta_quotient(spec.as_ptr(), 40, &mut f) }, HjfStatus::Ok);
    let (mut k, mut n, mut x) = (0i64, 0u64, 0usize);
    assert_eq!(unsafe { hjf_qexp_info(f, &mut k, &mut n, &mut x) }, HjfStatus::Ok);
    assert_eq!((k, n, x), (12, 1, 40));
    let mut a = 0i64;
    assert_eq!(unsafe { hjf_qexp_coeff_i64(f, 2, &mut a) }, HjfStatus::Ok);
    assert_eq!(a, -24);
    assert_eq!(unsafe { hjf_qexp_coeff_i64(f, 41, &mut a) }, HjfStatus::Precondition);

    let mut t = ptr::null_mut();
    assert_eq!(unsafe { hjf_hecke_t(f, 2, &mut t) }, HjfStatus::Ok);
    for m in 1..=20 {
        let (mut u, mut v) = (0i64, 0i64);
        unsafe {
            hjf_qexp_coeff_i64(t, m, &mut u);
            hjf_qexp_coeff_i64(f, m, &mut v);
        }
        assert_eq!(u, -24 * v);
    }
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { hjf_qexp_coeff_string(f, 3, &mut s) }, HjfStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(s) }.to_str().unwrap(), "252");
    let mut c = 0u64;
    assert_eq!(unsafe { hjf_nonvanish_count(f, 40, true, &mut c) }, HjfStatus::Ok);
    assert_eq!(c, (1..=40u64).filter(|n| hjf::arith::is_squarefree(*n)).count() as u64);
    unsafe {
        hjf_string_free(s);
        hjf_qexp_free(t);
        hjf_qexp_free(f);
        hjf_qexp_free(ptr::null_mut());
    }
}

#[test]
fn bad_eta_spec() {
    let spec = CString::new("1^3").unwrap();
    let mut f = ptr::null_mut();
    let st = unsafe { hjf_eta_quotient(spec.as_ptr(), 10, &mut f) };
    assert_ne!(st, HjfStatus::Ok);
    assert!(f.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn systems_round_trip_and_map() {
    let mut sys = ptr::null_mut();
    assert_eq!(unsafe { hjf_system_random(-4, 10, 3, 40, 7, &mut sys) }, HjfStatus::Ok);
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { hjf_system_to_json(sys, &mut json) }, HjfStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { hjf_system_from_json(json, &mut back) }, HjfStatus::Ok);
    let mut json2 = ptr::null_mut();
    unsafe { hjf_system_to_json(back, &mut json2) };
    assert_eq!(unsafe { CStr::from_ptr(json) }, unsafe { CStr::from_ptr(json2) });

    let mut spez = true;
    assert_eq!(unsafe { hjf_system_is_spez(sys, &mut spez) }, HjfStatus::Ok);

    let mut h = ptr::null_mut();
    assert_eq!(unsafe { hjf_ez_map(sys, &mut h) }, HjfStatus::Ok);
    let mut tw = ptr::null_mut();
    assert_eq!(unsafe { hjf_twisted_ez_map(sys, 0, 0, 200, &mut tw) }, HjfStatus::Ok);
    assert_eq!(unsafe { hjf_twisted_ez_map(sys, 10_000, 0, 200, &mut tw) }, HjfStatus::NotFound);
    unsafe {
        hjf_qexp_free(h);
        hjf_qexp_free(tw);
        hjf_string_free(json);
        hjf_string_free(json2);
        hjf_system_free(sys);
        hjf_system_free(back);
    }

    assert_eq!(unsafe { hjf_system_random(-5, 10, 3, 40, 7, &mut sys) }, HjfStatus::Precondition);
    let junk = CString::new("{").unwrap();
    assert_eq!(unsafe { hjf_system_from_json(junk.as_ptr(), &mut sys) }, HjfStatus::Parse);
}

#[test]
fn lower_bound() {
    let mut ok = false;
    assert_eq!(unsafe { hjf_lower_bound_positive(1, 87, 10_000, &mut ok) }, HjfStatus::Ok);
    assert!(ok);
    assert_eq!(unsafe { hjf_lower_bound_positive(0, 87, 10_000, &mut ok) }, HjfStatus::Precondition);
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/hjf.h")).unwrap();
    for name in [
        "hjf_last_error",
        "hjf_ring_norm",
        "hjf_system_random",
        "hjf_system_free",
        "hjf_eta_quotient",
        "hjf_qexp_free",
        "HjfStatus_NotFound",
        "typedef struct HjfQExp HjfQExp",
    ] {
        assert!(h.contains(name), "{name} missing from the header");
    }
}

/// The header compiles as C when a compiler is around.
#[test]
fn header_is_valid_c() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/include/hjf.h");
    let Ok(out) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-x", "c", "-std=c99", path])
        .output()
    else {
        eprintln!("no C compiler; skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
