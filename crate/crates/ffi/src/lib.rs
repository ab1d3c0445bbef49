//! C ABI over the simulator.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `_free` function. Every entry point returns an [`LsasimStatus`];
//! on failure, [`lsasim_last_error`] describes what went wrong on the calling
//! thread. Panics never cross the boundary; they surface as
//! `LSASIM_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use lsasim::metrics::{write_outputs, Report};
use lsasim::scenario::{bundled, parse_scenario, Scenario};
use lsasim::sim::{run_scenario, RunOutput, SimError};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LsasimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// The scenario document did not parse or validate.
    InvalidScenario = 3,
    NotFound = 4,
    /// The run could not be set up or did not reach its horizon.
    RunFailed = 5,
    Io = 6,
    Internal = 7,
}

/// A parsed, validated scenario.
pub struct LsasimScenario {
    inner: Scenario,
}

/// A finished run with its verdicts.
pub struct LsasimRun {
    output: RunOutput,
    report: Report,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).expect("nul bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: LsasimStatus, msg: impl Into<String>) -> LsasimStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> LsasimStatus) -> LsasimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(LsasimStatus::Internal, msg)
        }
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, LsasimStatus> {
    if p.is_null() {
        return Err(fail(LsasimStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(LsasimStatus::InvalidUtf8, e.to_string()))
}

/// Message for the last failure on this thread, or NULL if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lsasim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lsasim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses and validates a scenario document.
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsasim_scenario_parse(json: *const c_char, out: *mut *mut LsasimScenario) -> LsasimStatus {
    guard(|| {
        if out.is_null() {
            return fail(LsasimStatus::NullPointer, "null out pointer");
        }
        let t = match text(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_scenario(t) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(LsasimScenario { inner: s }));
                LsasimStatus::Ok
            }
            Err(e) => fail(LsasimStatus::InvalidScenario, e.to_string()),
        }
    })
}

/// Loads one of the bundled scenarios by name.
///
/// # Safety
/// `name` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsasim_scenario_bundled(name: *const c_char, out: *mut *mut LsasimScenario) -> LsasimStatus {
    guard(|| {
        if out.is_null() {
            return fail(LsasimStatus::NullPointer, "null out pointer");
        }
        let n = match text(name) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match bundled(n) {
            None => fail(LsasimStatus::NotFound, format!("no bundled scenario named {n}")),
            Some(Err(e)) => fail(LsasimStatus::InvalidScenario, e.to_string()),
            Some(Ok(s)) => {
                *out = Box::into_raw(Box::new(LsasimScenario { inner: s }));
                LsasimStatus::Ok
            }
        }
    })
}

/// # Safety
/// `scenario` must come from this library and not be freed.
#[no_mangle]
pub unsafe extern "C" fn lsasim_scenario_set_seed(scenario: *mut LsasimScenario, seed: u64) -> LsasimStatus {
    match scenario.as_mut() {
        Some(s) => {
            s.inner.seed = seed;
            LsasimStatus::Ok
        }
        None => fail(LsasimStatus::NullPointer, "null scenario"),
    }
}

/// # Safety
/// `scenario` must be NULL or come from this library, and is invalid after.
#[no_mangle]
pub unsafe extern "C" fn lsasim_scenario_free(scenario: *mut LsasimScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs the scenario to its horizon. The scenario is left untouched.
///
/// # Safety
/// `scenario` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsasim_scenario_run(
    scenario: *const LsasimScenario,
    out: *mut *mut LsasimRun,
) -> LsasimStatus {
    guard(|| {
        let Some(s) = scenario.as_ref() else {
            return fail(LsasimStatus::NullPointer, "null scenario");
        };
        if out.is_null() {
            return fail(LsasimStatus::NullPointer, "null out pointer");
        }
        match run_scenario(s.inner.clone()) {
            Ok(output) => {
                let report = Report::build(&output);
                *out = Box::into_raw(Box::new(LsasimRun { output, report }));
                LsasimStatus::Ok
            }
            Err(e @ SimError::InvalidScenario(_)) => fail(LsasimStatus::InvalidScenario, e.to_string()),
            Err(e @ SimError::Io(_)) => fail(LsasimStatus::Io, e.to_string()),
            Err(e) => fail(LsasimStatus::RunFailed, e.to_string()),
        }
    })
}

/// Writes 1 to `passed` if no verdict failed, else 0.
///
/// # Safety
/// `run` must come from this library; `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsasim_run_passed(run: *const LsasimRun, passed: *mut i32) -> LsasimStatus {
    let (Some(r), false) = (run.as_ref(), passed.is_null()) else {
        return fail(LsasimStatus::NullPointer, "null argument");
    };
    *passed = i32::from(r.report.summary.pass);
    LsasimStatus::Ok
}

/// Reads one summary metric, e.g. `goodput_bps.A`.
///
/// # Safety
/// `run` must come from this library, `name` NUL-terminated, `value` writable.
#[no_mangle]
pub unsafe extern "C" fn lsasim_run_metric(
    run: *const LsasimRun,
    name: *const c_char,
    value: *mut f64,
) -> LsasimStatus {
    guard(|| {
        let (Some(r), false) = (run.as_ref(), value.is_null()) else {
            return fail(LsasimStatus::NullPointer, "null argument");
        };
        let n = match text(name) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match r.report.summary.metrics.get(n) {
            Some(v) => {
                *value = *v;
                LsasimStatus::Ok
            }
            None => fail(LsasimStatus::NotFound, format!("no metric named {n}")),
        }
    })
}

/// The summary document as JSON. Release it with [`lsasim_string_free`].
///
/// # Safety
/// `run` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsasim_run_summary_json(run: *const LsasimRun, out: *mut *mut c_char) -> LsasimStatus {
    guard(|| {
        let (Some(r), false) = (run.as_ref(), out.is_null()) else {
            return fail(LsasimStatus::NullPointer, "null argument");
        };
        let json = serde_json::to_string(&r.report.summary).expect("summary serializes");
        *out = CString::new(json).expect("JSON has no NUL").into_raw();
        LsasimStatus::Ok
    })
}

/// Writes the report files into `dir`, creating it if needed.
///
/// # Safety
/// `run` must come from this library; `dir` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn lsasim_run_write_reports(run: *const LsasimRun, dir: *const c_char) -> LsasimStatus {
    guard(|| {
        let Some(r) = run.as_ref() else {
            return fail(LsasimStatus::NullPointer, "null run");
        };
        let d = match text(dir) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match write_outputs(&r.output, &r.report, Path::new(d), None, false) {
            Ok(_) => LsasimStatus::Ok,
            Err(e) => fail(LsasimStatus::Io, format!("{d}: {e}")),
        }
    })
}

/// # Safety
/// `run` must be NULL or come from this library, and is invalid after.
#[no_mangle]
pub unsafe extern "C" fn lsasim_run_free(run: *mut LsasimRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn lsasim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
