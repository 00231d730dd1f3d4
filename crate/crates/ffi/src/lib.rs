//! C ABI over hjf. Every call returns an `HjfStatus`; on failure the message
//! is kept per thread and read back with `hjf_last_error`.
//!
//! Handles are opaque. Objects returned through out-pointers are owned by the
//! caller and released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use hjf::characters::{build_g, extensions_of, g_characters, unit_group_capped};
use hjf::elliptic::{
    eta_quotient, hecke_t, lower_bound_constant, nonvanish_count, parse_eta_spec, Constraints,
    QError, QExpansion,
};
use hjf::jacobi::{ez_map, is_spez, random_admissible, twisted_ez_map, JacobiCoefficientSystem};
use hjf::ring::{QuadField, RingElement};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HjfStatus {
    Ok = 0,
    NullPointer = 1,
    Parse = 2,
    Precondition = 3,
    NotFound = 4,
    Overflow = 5,
    Panic = 6,
}

/// A Jacobi coefficient system.
pub struct HjfSystem(JacobiCoefficientSystem);

/// A truncated q-expansion.
pub struct HjfQExp(QExpansion);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(s).expect("no interior nul")));
}

fn fail(status: HjfStatus, msg: impl Into<String>) -> HjfStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> HjfStatus) -> HjfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(HjfStatus::Panic, msg)
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, HjfStatus> {
    if p.is_null() {
        return Err(fail(HjfStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(HjfStatus::Parse, "string is not UTF-8"))
}

fn qerr(e: QError) -> HjfStatus {
    fail(HjfStatus::Precondition, e.to_string())
}

macro_rules! out_ptr {
    ($p:expr) => {
        if $p.is_null() {
            return fail(HjfStatus::NullPointer, "null output pointer");
        }
    };
}

macro_rules! handle {
    ($p:expr) => {
        match unsafe { $p.as_ref() } {
            Some(h) => &h.0,
            None => return fail(HjfStatus::NullPointer, "null handle"),
        }
    };
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn hjf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn hjf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn give_string(s: String, out: *mut *mut c_char) {
    let c = CString::new(s).expect("no interior nul");
    unsafe { *out = c.into_raw() };
}

/// Norm of an element written `a+b*w@D`.
///
/// # Safety
/// `elem` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hjf_ring_norm(elem: *const c_char, out: *mut i64) -> HjfStatus {
    guard(|| {
        out_ptr!(out);
        let s = match read_str(elem) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match s.parse::<RingElement>() {
            Ok(x) => {
                *out = x.norm();
                HjfStatus::Ok
            }
            Err(e) => fail(HjfStatus::Parse, e.to_string()),
        }
    })
}

/// Seeded random admissible system.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hjf_system_random(
    d: i64,
    weight: i64,
    index: u64,
    disc_bound: u64,
    seed: u64,
    out: *mut *mut HjfSystem,
) -> HjfStatus {
    guard(|| {
        out_ptr!(out);
        let f = match QuadField::new(d) {
            Ok(f) => f,
            Err(e) => return fail(HjfStatus::Precondition, e.to_string()),
        };
        match random_admissible(f, weight, index, disc_bound, seed) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(HjfSystem(s)));
                HjfStatus::Ok
            }
            Err(e) => fail(HjfStatus::Precondition, e.to_string()),
        }
    })
}

/// Parses a system from its JSON file format.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hjf_system_from_json(
    json: *const c_char,
    out: *mut *mut HjfSystem,
) -> HjfStatus {
    guard(|| {
        out_ptr!(out);
        let s = match read_str(json) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match JacobiCoefficientSystem::from_json(s) {
            Ok(sys) => {
                *out = Box::into_raw(Box::new(HjfSystem(sys)));
                HjfStatus::Ok
            }
            Err(e) => fail(HjfStatus::Parse, e.to_string()),
        }
    })
}

/// JSON text of a system; free with `hjf_string_free`.
///
/// # Safety
/// `sys` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hjf_system_to_json(sys: *const HjfSystem, out: *mut *mut c_char) -> HjfStatus {
    guard(|| {
        out_ptr!(out);
        let s = handle!(sys);
        give_string(s.to_json(), out);
        HjfStatus::Ok
    })
}

/// # Safety
/// `sys` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hjf_system_is_spez(sys: *const HjfSystem, out: *mut bool) -> HjfStatus {
    guard(|| {
        out_ptr!(out);
        *out = is_spez(handle!(sys));
        HjfStatus::Ok
    })
}

/// # Safety
/// `sys` is a handle from this library or NULL; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn hjf_system_free(sys: *mut HjfSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

fn give_qexp(f: QExpansion, out: *mut *mut HjfQExp) -> HjfStatus {
    unsafe { *out = Box::into_raw(Box::new(HjfQExp(f))) };
    HjfStatus::Ok
}

/// Untwisted Eichler-Zagier image.
///
/// # Safety
/// `sys` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hjf_ez_map(sys: *const HjfSystem, out: *mut *mut HjfQExp) -> HjfStatus {
    guard(|| {
        out_ptr!(out);
        give_qexp(ez_map(handle!(sys)), out)
    })
}

/// Twisted image for the `eta`-th character of G and its `ext`-th extension.
/// An index past the end gives `NotFound`.
///
/// # Safety
/// `sys` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hjf_twisted_ez_map(
    sys: *const HjfSystem,
    eta: usize,
    ext: usize,
    group_cap: u64,
    out: *mut *mut HjfQExp,
) -> HjfStatus {
    guard(|| {
        out_ptr!(out);
        let s = handle!(sys);
        let grp = match unit_group_capped(s.field(), s.index(), group_cap) {
            Ok(g) => g,
            Err(e) => return fail(HjfStatus::Precondition, e.to_string()),
        };
        let etas = g_characters(&build_g(&grp), s.weight());
        let Some(e) = etas.get(eta) else {
            return fail(HjfStatus::NotFound, format!("eta {eta} of {}", etas.len()));
        };
        let exts = extensions_of(e);
        let Some(x) = exts.get(ext) else {
            return fail(HjfStatus::NotFound, format!("ext {ext} of {}", exts.len()));
        };
        match twisted_ez_map(s, x) {
            Ok(f) => give_qexp(f, out),
            Err(e) => fail(HjfStatus::Precondition, e.to_string()),
        }
    })
}

/// Eta quotient from a spec like `1^-4,2^10,4^-4`.
///
/// # Safety
/// `spec` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hjf_eta_quotient(
    spec: *const c_char,
    precision: usize,
    out: *mut *mut HjfQExp,
) -> HjfStatus {
    guard(|| {
        out_ptr!(out);
        let s = match read_str(spec) {
            Ok(s) => s,
            Err(st) => return st,
        };
        let factors = match parse_eta_spec(s) {
            Ok(f) => f,
            Err(e) => return fail(HjfStatus::Parse, e.to_string()),
        };
        match eta_quotient(&factors, precision) {
            Ok(f) => give_qexp(f, out),
            Err(e) => qerr(e),
        }
    })
}

/// Hecke operator T_n.
///
/// # Safety
/// `f` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hjf_hecke_t(f: *const HjfQExp, n: u64, out: *mut *mut HjfQExp) -> HjfStatus {
    guard(|| {
        out_ptr!(out);
        match hecke_t(handle!(f), n) {
            Ok(g) => give_qexp(g, out),
            Err(e) => qerr(e),
        }
    })
}

/// Weight, level and precision.
///
/// # Safety
/// `f` is a live handle; the out-pointers are writable.
#[no_mangle]
pub unsafe extern "C" fn hjf_qexp_info(
    f: *const HjfQExp,
    weight: *mut i64,
    level: *mut u64,
    precision: *mut usize,
) -> HjfStatus {
    guard(|| {
        out_ptr!(weight);
        out_ptr!(level);
        out_ptr!(precision);
        let f = handle!(f);
        *weight = f.weight();
        *level = f.level();
        *precision = f.precision();
        HjfStatus::Ok
    })
}

/// a(n) as a 64-bit integer; `Overflow` if it is not one.
///
/// # Safety
/// `f` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hjf_qexp_coeff_i64(f: *const HjfQExp, n: usize, out: *mut i64) -> HjfStatus {
    guard(|| {
        out_ptr!(out);
        let f = handle!(f);
        if n > f.precision() {
            return fail(HjfStatus::Precondition, format!("n = {n} beyond precision {}", f.precision()));
        }
        match f.coeff_integer(n).and_then(|v| i64::try_from(v).ok()) {
            Some(v) => {
                *out = v;
                HjfStatus::Ok
            }
            None => fail(HjfStatus::Overflow, format!("a({n}) is not a 64-bit integer")),
        }
    })
}

/// a(n) in the text form of the q-expansion files; free with `hjf_string_free`.
///
/// # Safety
/// `f` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hjf_qexp_coeff_string(f: *const HjfQExp, n: usize, out: *mut *mut c_char) -> HjfStatus {
    guard(|| {
        out_ptr!(out);
        let f = handle!(f);
        if n > f.precision() {
            return fail(HjfStatus::Precondition, format!("n = {n} beyond precision {}", f.precision()));
        }
        give_string(f.coeff(n).to_string(), out);
        HjfStatus::Ok
    })
}

/// #{1 <= n <= x : a(n) != 0}, optionally over square-free n only.
///
/// # Safety
/// `f` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hjf_nonvanish_count(
    f: *const HjfQExp,
    x: usize,
    squarefree: bool,
    out: *mut u64,
) -> HjfStatus {
    guard(|| {
        out_ptr!(out);
        let c = if squarefree { Constraints::squarefree() } else { Constraints::none() };
        match nonvanish_count(handle!(f), x, &c) {
            Ok(v) => {
                *out = v;
                HjfStatus::Ok
            }
            Err(e) => qerr(e),
        }
    })
}

/// # Safety
/// `f` is a handle from this library or NULL; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn hjf_qexp_free(f: *mut HjfQExp) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Whether the sieve lower-bound constant is provably positive.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hjf_lower_bound_positive(
    level: u64,
    cutoff: u64,
    truncation: u64,
    out: *mut bool,
) -> HjfStatus {
    guard(|| {
        out_ptr!(out);
        if level == 0 || cutoff < 2 || truncation < cutoff {
            return fail(HjfStatus::Precondition, "need level >= 1, cutoff >= 2, truncation >= cutoff");
        }
        *out = lower_bound_constant(level, cutoff, truncation).positive;
        HjfStatus::Ok
    })
}
