//! C ABI over the `twistkam` core.
//!
//! Objects cross the boundary as opaque handles created by `tk_*_new` (or a
//! solver entry point) and released by the matching `tk_*_free`. Every
//! fallible call returns a [`TkStatus`]; on failure the message is available
//! from [`tk_last_error`] on the same thread. Strings handed out by the
//! library are released with [`tk_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use twistkam::distortion::Verdict;
use twistkam::harness::{run_criteria, ExperimentConfig, RunRecord, RunStatus};
use twistkam::number_theory::ConstantTypeIrrational;
use twistkam::twist_map::{Potential, TwistMap};
use twistkam::variational::{birkhoff_minimize, Configuration};
use twistkam::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TkStatus {
    Ok = 0,
    InvalidInput = 1,
    Infeasible = 2,
    Convergence = 3,
    Degenerate = 4,
    EmptyFamily = 5,
    Invariant = 6,
    Io = 7,
    NullPointer = 8,
    Panic = 9,
}

impl From<&Error> for TkStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidInput(_)
            | Error::OutOfRange { .. }
            | Error::Kappa { .. }
            | Error::Window { .. }
            | Error::Ordering(_) => TkStatus::InvalidInput,
            Error::Infeasible(_) | Error::InsufficientDepth { .. } => TkStatus::Infeasible,
            Error::Convergence { .. } => TkStatus::Convergence,
            Error::Degenerate(_) => TkStatus::Degenerate,
            Error::EmptyFamily(_) => TkStatus::EmptyFamily,
            Error::Invariant(_) => TkStatus::Invariant,
            Error::Io(_) | Error::Serde(_) => TkStatus::Io,
        }
    }
}

/// Cross-seed verdict of a run record.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TkVerdict {
    BoundedWithMargin = 0,
    Inconclusive = 1,
    Violated = 2,
    /// The run stopped before any report was produced.
    None = 3,
}

/// Rotation number with its continued-fraction data.
pub struct TkAlpha(ConstantTypeIrrational);

/// One member of the twist-map family.
pub struct TkMap(TwistMap);

/// A solved periodic minimal configuration.
pub struct TkConfiguration(Configuration);

/// A full pipeline run.
pub struct TkRecord(RunRecord);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (TkStatus, String)>) -> TkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TkStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside twistkam");
            TkStatus::Panic
        }
    }
}

fn core<T>(r: twistkam::Result<T>) -> Result<T, (TkStatus, String)> {
    r.map_err(|e| (TkStatus::from(&e), e.to_string()))
}

fn null(what: &str) -> (TkStatus, String) {
    (TkStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (TkStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (TkStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, (TkStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| (TkStatus::InvalidInput, format!("{what}: {e}")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn tk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates a named rotation number (`"golden"`, `"silver"`) stored to `depth`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_alpha_preset(name: *const c_char, depth: usize, out: *mut *mut TkAlpha) -> TkStatus {
    guard(|| {
        let o = out_ptr(out)?;
        let a = core(ConstantTypeIrrational::preset(string(name, "name")?, depth))?;
        *o = Box::into_raw(Box::new(TkAlpha(a)));
        Ok(())
    })
}

/// Creates a rotation number from one period of partial quotients.
///
/// # Safety
/// `quotients` must point to `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_alpha_from_quotients(
    quotients: *const u64,
    len: usize,
    depth: usize,
    out: *mut *mut TkAlpha,
) -> TkStatus {
    guard(|| {
        let o = out_ptr(out)?;
        if quotients.is_null() {
            return Err(null("quotients"));
        }
        let q = std::slice::from_raw_parts(quotients, len);
        let a = core(ConstantTypeIrrational::from_partial_quotients(q, depth))?;
        *o = Box::into_raw(Box::new(TkAlpha(a)));
        Ok(())
    })
}

unsafe fn out_ptr<'a, T>(out: *mut *mut T) -> Result<&'a mut *mut T, (TkStatus, String)> {
    let o = self::out(out, "out")?;
    *o = ptr::null_mut();
    Ok(o)
}

/// # Safety
/// `alpha` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn tk_alpha_free(alpha: *mut TkAlpha) {
    if !alpha.is_null() {
        drop(Box::from_raw(alpha));
    }
}

/// Number of stored convergents.
///
/// # Safety
/// `alpha` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tk_alpha_depth(alpha: *const TkAlpha, out: *mut usize) -> TkStatus {
    guard(|| {
        *self::out(out, "out")? = deref(alpha, "alpha")?.0.depth();
        Ok(())
    })
}

/// Convergent `p_n / q_n`.
///
/// # Safety
/// `alpha` must be a live handle; `p` and `q` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_alpha_convergent(alpha: *const TkAlpha, n: usize, p: *mut u64, q: *mut u64) -> TkStatus {
    guard(|| {
        let a = &deref(alpha, "alpha")?.0;
        let (pn, qn) = (core(a.p(n))?, core(a.q(n))?);
        *self::out(p, "p")? = pn;
        *self::out(q, "q")? = qn;
        Ok(())
    })
}

/// Distance from `q_n alpha` to the nearest integer.
///
/// # Safety
/// `alpha` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_alpha_qalpha_norm(alpha: *const TkAlpha, n: usize, out: *mut f64) -> TkStatus {
    guard(|| {
        *self::out(out, "out")? = core(deref(alpha, "alpha")?.0.qalpha_norm(n))?;
        Ok(())
    })
}

/// Map at `level` with the standard potential scaled by `amplitude`. The
/// rotation number is copied; `alpha` stays owned by the caller.
///
/// # Safety
/// `alpha` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_map_new(
    alpha: *const TkAlpha,
    level: usize,
    eps: f64,
    amplitude: f64,
    out: *mut *mut TkMap,
) -> TkStatus {
    guard(|| {
        let o = out_ptr(out)?;
        let a = deref(alpha, "alpha")?.0.clone();
        let m = core(TwistMap::new(a, level, eps, Potential::standard().scaled(amplitude)))?;
        *o = Box::into_raw(Box::new(TkMap(m)));
        Ok(())
    })
}

/// # Safety
/// `map` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn tk_map_free(map: *mut TkMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// One forward step `(x, y) -> (x', y')` on the lift.
///
/// # Safety
/// `map` must be a live handle; `xp` and `yp` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_map_step(map: *const TkMap, x: f64, y: f64, xp: *mut f64, yp: *mut f64) -> TkStatus {
    guard(|| {
        let (a, b) = deref(map, "map")?.0.step(x, y);
        *self::out(xp, "xp")? = a;
        *self::out(yp, "yp")? = b;
        Ok(())
    })
}

/// Sampled `|det DF - 1|` and generating-function deviation.
///
/// # Safety
/// `map` must be a live handle; `det` and `generating` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_map_self_check(
    map: *const TkMap,
    samples: usize,
    seed: u64,
    det: *mut f64,
    generating: *mut f64,
) -> TkStatus {
    guard(|| {
        let c = deref(map, "map")?.0.self_check(samples, seed);
        *self::out(det, "det")? = c.det_deviation;
        *self::out(generating, "generating")? = c.generating_deviation();
        Ok(())
    })
}

/// Least-action `(p, q)` periodic configuration of `map`.
///
/// # Safety
/// `map` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_minimize(
    map: *const TkMap,
    p: u64,
    q: u64,
    seed: u64,
    out: *mut *mut TkConfiguration,
) -> TkStatus {
    guard(|| {
        let o = out_ptr(out)?;
        let c = core(birkhoff_minimize(&deref(map, "map")?.0, p, q, seed))?;
        *o = Box::into_raw(Box::new(TkConfiguration(c)));
        Ok(())
    })
}

/// # Safety
/// `config` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn tk_configuration_free(config: *mut TkConfiguration) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Period `q` of the configuration.
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_configuration_period(config: *const TkConfiguration, out: *mut u64) -> TkStatus {
    guard(|| {
        *self::out(out, "out")? = deref(config, "config")?.0.q();
        Ok(())
    })
}

/// Lifted position `x_i` for any integer `i`.
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_configuration_x(config: *const TkConfiguration, i: i64, out: *mut f64) -> TkStatus {
    guard(|| {
        *self::out(out, "out")? = deref(config, "config")?.0.x(i);
        Ok(())
    })
}

/// Stationarity residual and periodic action.
///
/// # Safety
/// `config` must be a live handle; `residual` and `action` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_configuration_diagnostics(
    config: *const TkConfiguration,
    residual: *mut f64,
    action: *mut f64,
) -> TkStatus {
    guard(|| {
        let c = &deref(config, "config")?.0;
        *self::out(residual, "residual")? = c.residual();
        *self::out(action, "action")? = c.action();
        Ok(())
    })
}

/// Runs the full criteria pipeline. `config_toml` may be null for the
/// default golden configuration. Failures inside the pipeline are part of
/// the record; only an unusable request returns an error status.
///
/// # Safety
/// `config_toml` must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_run_criteria(
    config_toml: *const c_char,
    workers: usize,
    out: *mut *mut TkRecord,
) -> TkStatus {
    guard(|| {
        let o = out_ptr(out)?;
        let config = if config_toml.is_null() {
            ExperimentConfig::default()
        } else {
            core(ExperimentConfig::from_toml(string(config_toml, "config_toml")?))?
        };
        let rec = core(run_criteria(&config, workers))?;
        *o = Box::into_raw(Box::new(TkRecord(rec)));
        Ok(())
    })
}

/// # Safety
/// `record` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn tk_record_free(record: *mut TkRecord) {
    if !record.is_null() {
        drop(Box::from_raw(record));
    }
}

/// Whether every seed produced a report (`1`), or the run was rejected or
/// stopped early (`0`).
///
/// # Safety
/// `record` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_record_complete(record: *const TkRecord, out: *mut i32) -> TkStatus {
    guard(|| {
        *self::out(out, "out")? = i32::from(deref(record, "record")?.0.status == RunStatus::Complete);
        Ok(())
    })
}

/// # Safety
/// `record` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_record_verdict(record: *const TkRecord, out: *mut TkVerdict) -> TkStatus {
    guard(|| {
        let v = match deref(record, "record")?.0.verdict() {
            Some(Verdict::BoundedWithMargin) => TkVerdict::BoundedWithMargin,
            Some(Verdict::Inconclusive) => TkVerdict::Inconclusive,
            Some(Verdict::Violated) => TkVerdict::Violated,
            None => TkVerdict::None,
        };
        *self::out(out, "out")? = v;
        Ok(())
    })
}

/// The record as JSON; release with [`tk_string_free`].
///
/// # Safety
/// `record` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_record_json(record: *const TkRecord, out: *mut *mut c_char) -> TkStatus {
    guard(|| {
        let o = out_ptr(out)?;
        *o = into_c_string(deref(record, "record")?.0.to_json());
        Ok(())
    })
}
