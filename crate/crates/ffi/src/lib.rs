//! C ABI over solvkit.
//!
//! Models are opaque handles built from JSON text. Every fallible call returns
//! one of the `SOLVKIT_*` codes; on anything other than `SOLVKIT_OK` the message
//! is available from `solvkit_last_error` until the next call on the same thread.
//! Strings handed out by the library must be released with `solvkit_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use solvkit::cli::{auto_backend, verify_model, Backend};
use solvkit::model::{ModelFile, V31Mode};
use solvkit::polyop::HtOperator;
use solvkit::qes::QesModel;
use solvkit::scalar::{RealField, Rational};
use solvkit::verify::{Check, Status};
use solvkit::Error;

pub const SOLVKIT_OK: i32 = 0;
/// A verification ran and at least one check failed.
pub const SOLVKIT_CHECK_FAILED: i32 = 1;
/// Malformed JSON, bad parameters or a model violating its constraints.
pub const SOLVKIT_INVALID_INPUT: i32 = 2;
/// The request is outside what the model supports (wrong degree, non-QES, ...).
pub const SOLVKIT_UNSUPPORTED: i32 = 3;
/// A numerical failure inside the library.
pub const SOLVKIT_NUMERIC: i32 = 4;
pub const SOLVKIT_NULL_ARGUMENT: i32 = 5;
/// The output buffer is too short; the needed length was still written.
pub const SOLVKIT_BUFFER_TOO_SMALL: i32 = 6;
pub const SOLVKIT_PANIC: i32 = 7;

/// Parsed model. Opaque to C.
pub struct SolvkitModel {
    file: ModelFile,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn code_of(e: &Error) -> i32 {
    match solvkit::cli::exit_code(e) {
        solvkit::cli::EXIT_INPUT => SOLVKIT_INVALID_INPUT,
        solvkit::cli::EXIT_UNSUPPORTED => SOLVKIT_UNSUPPORTED,
        _ => SOLVKIT_NUMERIC,
    }
}

/// Runs `f`, turning errors and panics into codes.
fn guard(f: impl FnOnce() -> Result<i32, (i32, String)>) -> i32 {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(code)) => code,
        Ok(Err((code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            SOLVKIT_PANIC
        }
    }
}

fn lib_err(e: Error) -> (i32, String) {
    (code_of(&e), e.to_string())
}

fn null(name: &str) -> (i32, String) {
    (SOLVKIT_NULL_ARGUMENT, format!("{name} is null"))
}

unsafe fn model_ref<'a>(model: *const SolvkitModel) -> Result<&'a SolvkitModel, (i32, String)> {
    model.as_ref().ok_or_else(|| null("model"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, (i32, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (SOLVKIT_INVALID_INPUT, format!("{name} is not UTF-8")))
}

fn hand_out(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn solvkit_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. Owned by the library.
#[no_mangle]
pub extern "C" fn solvkit_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses and validates a model from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn solvkit_model_from_json(json: *const c_char, out: *mut *mut SolvkitModel) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = str_arg(json, "json")?;
        let file = ModelFile::from_json(text).map_err(lib_err)?;
        file.load::<f64>().map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SolvkitModel { file }));
        Ok(SOLVKIT_OK)
    })
}

/// Releases a model. NULL is ignored.
///
/// # Safety
/// `model` must come from `solvkit_model_from_json` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn solvkit_model_free(model: *mut SolvkitModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Degree L of the model's potential.
///
/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn solvkit_model_degree(model: *const SolvkitModel, out: *mut usize) -> i32 {
    guard(|| {
        let m = model_ref(model)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = m.file.potential.degree;
        Ok(SOLVKIT_OK)
    })
}

fn energies<R: RealField>(file: &ModelFile, n_max: usize) -> solvkit::Result<Vec<f64>> {
    let m = file.load::<R>()?;
    let op = HtOperator::new(&m.spec, &m.coord)?;
    if op.degree() != 2 {
        return Err(Error::NotExactlySolvable { degree: op.degree() });
    }
    if let Some(n) = m.coord.n_bound().filter(|&n| n_max > n as usize) {
        return Err(Error::InvalidParameter(format!("n_max {n_max} exceeds N = {n}")));
    }
    (0..=n_max).map(|n| op.energy(n).map(|e| e.to_f64())).collect()
}

/// Writes E(0), ..., E(n_max) of an L = 2 model into `out` (length `len`).
/// `written` receives n_max + 1 even when the buffer is too small.
///
/// # Safety
/// `out` must hold `len` doubles; `written` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn solvkit_energies(
    model: *const SolvkitModel,
    n_max: usize,
    out: *mut f64,
    len: usize,
    written: *mut usize,
) -> i32 {
    guard(|| {
        let m = model_ref(model)?;
        let e = match auto_backend(&m.file) {
            Backend::Rational => energies::<Rational>(&m.file, n_max),
            Backend::Float => energies::<f64>(&m.file, n_max),
        }
        .map_err(lib_err)?;
        if !written.is_null() {
            *written = e.len();
        }
        if len < e.len() {
            return Err((SOLVKIT_BUFFER_TOO_SMALL, format!("need {} values, got room for {len}", e.len())));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(e.as_ptr(), out, e.len());
        Ok(SOLVKIT_OK)
    })
}

/// Runs identity checks and returns the JSON report through `report_json`.
/// `checks` is a comma-separated list or NULL for the default set.
/// Returns `SOLVKIT_CHECK_FAILED` (with the report still written) when a check fails.
///
/// # Safety
/// `checks` must be NULL or NUL-terminated; `report_json` must be valid.
/// The returned string must be released with `solvkit_string_free`.
#[no_mangle]
pub unsafe extern "C" fn solvkit_verify(
    model: *const SolvkitModel,
    checks: *const c_char,
    seed: u64,
    report_json: *mut *mut c_char,
) -> i32 {
    guard(|| {
        let m = model_ref(model)?;
        if report_json.is_null() {
            return Err(null("report_json"));
        }
        *report_json = ptr::null_mut();
        let list = if checks.is_null() {
            None
        } else {
            let raw = str_arg(checks, "checks")?;
            let parsed = raw
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| Check::parse(s).ok_or_else(|| (SOLVKIT_INVALID_INPUT, format!("unknown check {s:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            Some(parsed)
        };
        let report =
            verify_model(&m.file, auto_backend(&m.file), list.as_deref(), seed, false).map_err(lib_err)?;
        let text = serde_json::to_string(&report).map_err(|e| (SOLVKIT_NUMERIC, e.to_string()))?;
        *report_json = hand_out(text);
        Ok(match report.status {
            Status::Pass => SOLVKIT_OK,
            Status::Fail => SOLVKIT_CHECK_FAILED,
        })
    })
}

/// Eigenvalues of the invariant block of an L = 3 or 4 model, ascending by real part.
/// A negative `m` takes the subspace degree from the model's qes block.
/// `written` receives M + 1 even when the buffers are too small.
///
/// # Safety
/// `re` and `im` must each hold `len` doubles; `written` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn solvkit_qes_eigenvalues(
    model: *const SolvkitModel,
    m: i64,
    re: *mut f64,
    im: *mut f64,
    len: usize,
    written: *mut usize,
) -> i32 {
    guard(|| {
        let h = model_ref(model)?;
        let big_m = if m >= 0 {
            m as usize
        } else {
            h.file.qes.as_ref().map(|q| q.m).ok_or_else(|| {
                (SOLVKIT_INVALID_INPUT, "negative M needs a qes block in the model".to_string())
            })?
        };
        let policy = h.file.qes.as_ref().map_or(V31Mode::Enforce, |q| q.v31).policy();
        let model = h.file.load::<f64>().map_err(lib_err)?;
        let q = QesModel::build(&model.spec, &model.coord, big_m, policy).map_err(lib_err)?;
        let vals = q.spectrum().map_err(lib_err)?;
        if !written.is_null() {
            *written = vals.len();
        }
        if len < vals.len() {
            return Err((SOLVKIT_BUFFER_TOO_SMALL, format!("need {} values, got room for {len}", vals.len())));
        }
        if re.is_null() || im.is_null() {
            return Err(null("re/im"));
        }
        for (i, z) in vals.iter().enumerate() {
            *re.add(i) = z.re;
            *im.add(i) = z.im;
        }
        Ok(SOLVKIT_OK)
    })
}

/// Releases a string returned by the library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn solvkit_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
