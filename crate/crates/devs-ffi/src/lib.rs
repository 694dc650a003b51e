//! C ABI for the devs simulation kernel.
//!
//! The surface mirrors the `devs` command line: parse a configuration, then
//! run, validate, or flatten-check it. Handles are opaque; every fallible
//! call returns a [`DevsStatus`] and leaves a human-readable message for
//! [`devs_last_error`]. The generated header is committed at
//! `include/devs.h` and kept in sync by the build script.
//!
//! Ownership rules, in C terms:
//! - `devs_experiment_parse` and `devs_experiment_run` allocate; release
//!   with `devs_experiment_free` / `devs_report_free`.
//! - `devs_report_csv` / `devs_report_summary` borrow from the report and
//!   are valid until it is freed.
//! - Strings returned through `char **` out-parameters are owned by the
//!   caller; release them with `devs_string_free`.
//! - `devs_last_error` borrows a thread-local buffer, valid on the calling
//!   thread until the next `devs_*` call on that thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use devs_core::coupled::validate_atomic_spec;
use devs_core::experiment::config::parse_config;
use devs_core::experiment::run::build_component;
use devs_core::experiment::{flatten_check, run_experiment, ExperimentConfig, RunError};
use devs_core::Component;

/// Result of every fallible call in this API.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DevsStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// The configuration text was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The configuration text did not parse; see `devs_last_error`.
    ConfigError = 3,
    /// The model was structurally invalid (coupling violations, failed
    /// build, or no coupled structure to work on).
    StructureError = 4,
    /// The simulation itself faulted, or produced nothing to summarize.
    SimulationFault = 5,
    /// Flatten-check ran both variants and they disagreed.
    NotEquivalent = 6,
    /// An internal invariant failed; the library caught a panic at the
    /// boundary. See `devs_last_error`.
    Panic = 7,
}

/// A parsed experiment configuration. Opaque.
pub struct DevsExperiment {
    config: ExperimentConfig,
}

/// A finished run: rendered CSV, summary text, and the final simulated
/// time. Opaque.
pub struct DevsReport {
    csv: CString,
    summary: CString,
    final_time: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("NUL bytes stripped above");
    });
}

fn fail(status: DevsStatus, message: &str) -> DevsStatus {
    set_last_error(message);
    status
}

fn ok() -> DevsStatus {
    set_last_error("");
    DevsStatus::Ok
}

/// Runs `body` with a panic guard so unwinding never crosses the C boundary.
fn guarded(body: impl FnOnce() -> DevsStatus) -> DevsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown internal error".to_string());
            fail(DevsStatus::Panic, &format!("internal panic: {message}"))
        }
    }
}

fn status_for(error: &RunError) -> DevsStatus {
    match error {
        RunError::Invalid(_) | RunError::Flatten(_) | RunError::Build(_) => {
            DevsStatus::StructureError
        }
        RunError::Fault(_) | RunError::Summary(_) => DevsStatus::SimulationFault,
    }
}

/// Hands out an owned C string through an out-parameter.
///
/// # Safety
/// `out` must be a valid, writable pointer.
unsafe fn give_string(out: *mut *mut c_char, text: &str) {
    let owned = CString::new(text.replace('\0', " ")).expect("NUL bytes stripped above");
    unsafe { *out = owned.into_raw() };
}

/// The message describing the most recent failure on this thread. Borrowed:
/// valid until the next `devs_*` call on the same thread. Never null; empty
/// after a success.
#[no_mangle]
pub extern "C" fn devs_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parses configuration text into an experiment handle.
///
/// On `Ok`, `*out` owns the new handle; release it with
/// `devs_experiment_free`. On any failure `*out` is left untouched.
/// # Safety
/// `config_text` must point to a NUL-terminated string and `out` must be
/// valid for writing, both for the duration of the call.
#[no_mangle]
pub unsafe extern "C" fn devs_experiment_parse(
    config_text: *const c_char,
    out: *mut *mut DevsExperiment,
) -> DevsStatus {
    guarded(|| {
        if config_text.is_null() || out.is_null() {
            return fail(DevsStatus::NullPointer, "null pointer argument");
        }
        let text = match unsafe { CStr::from_ptr(config_text) }.to_str() {
            Ok(text) => text,
            Err(_) => {
                return fail(
                    DevsStatus::InvalidUtf8,
                    "configuration text is not valid UTF-8",
                )
            }
        };
        match parse_config(text) {
            Ok(config) => {
                unsafe { *out = Box::into_raw(Box::new(DevsExperiment { config })) };
                ok()
            }
            Err(error) => fail(DevsStatus::ConfigError, &error.to_string()),
        }
    })
}

/// Releases an experiment handle. Accepts null.
/// # Safety
/// `experiment` must be null or a handle from `devs_experiment_parse` not
/// yet freed; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn devs_experiment_free(experiment: *mut DevsExperiment) {
    if !experiment.is_null() {
        drop(unsafe { Box::from_raw(experiment) });
    }
}

/// Runs the experiment to completion.
///
/// On `Ok`, `*out` owns a report handle; release it with
/// `devs_report_free`. On any failure `*out` is left untouched.
/// # Safety
/// `experiment` must be a live handle from `devs_experiment_parse` and
/// `out` must be valid for writing, both for the duration of the call.
#[no_mangle]
pub unsafe extern "C" fn devs_experiment_run(
    experiment: *const DevsExperiment,
    out: *mut *mut DevsReport,
) -> DevsStatus {
    guarded(|| {
        if experiment.is_null() || out.is_null() {
            return fail(DevsStatus::NullPointer, "null pointer argument");
        }
        let experiment = unsafe { &*experiment };
        match run_experiment(&experiment.config) {
            Ok(report) => {
                let report = DevsReport {
                    csv: CString::new(report.csv).expect("CSV carries no NUL bytes"),
                    summary: CString::new(report.summary).expect("summary carries no NUL bytes"),
                    final_time: report.final_time.as_f64(),
                };
                unsafe { *out = Box::into_raw(Box::new(report)) };
                ok()
            }
            Err(error) => fail(status_for(&error), &error.to_string()),
        }
    })
}

/// The run's CSV body (header line included). Borrowed from the report;
/// valid until `devs_report_free`. Null only if `report` is null.
/// # Safety
/// `report` must be null or a live handle from `devs_experiment_run`.
#[no_mangle]
pub unsafe extern "C" fn devs_report_csv(report: *const DevsReport) -> *const c_char {
    if report.is_null() {
        set_last_error("null report handle");
        return std::ptr::null();
    }
    unsafe { (*report).csv.as_ptr() }
}

/// The run's aligned summary text. Borrowed from the report; valid until
/// `devs_report_free`. Null only if `report` is null.
/// # Safety
/// `report` must be null or a live handle from `devs_experiment_run`.
#[no_mangle]
pub unsafe extern "C" fn devs_report_summary(report: *const DevsReport) -> *const c_char {
    if report.is_null() {
        set_last_error("null report handle");
        return std::ptr::null();
    }
    unsafe { (*report).summary.as_ptr() }
}

/// Simulated time of the last executed event. NaN if `report` is null.
/// # Safety
/// `report` must be null or a live handle from `devs_experiment_run`.
#[no_mangle]
pub unsafe extern "C" fn devs_report_final_time(report: *const DevsReport) -> f64 {
    if report.is_null() {
        set_last_error("null report handle");
        return f64::NAN;
    }
    unsafe { (*report).final_time }
}

/// Releases a report handle. Accepts null.
/// # Safety
/// `report` must be null or a handle from `devs_experiment_run` not yet
/// freed; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn devs_report_free(report: *mut DevsReport) {
    if !report.is_null() {
        drop(unsafe { Box::from_raw(report) });
    }
}

/// Validates the configured model's structure without simulating.
///
/// Always writes the full validation report to `*out_report` when the model
/// builds (even on violations — it lists them one per line); the caller
/// frees it with `devs_string_free`. Returns `Ok` for a clean report,
/// `StructureError` otherwise.
/// # Safety
/// `experiment` must be a live handle from `devs_experiment_parse` and
/// `out_report` must be valid for writing, both for the duration of the
/// call.
#[no_mangle]
pub unsafe extern "C" fn devs_experiment_validate(
    experiment: *const DevsExperiment,
    out_report: *mut *mut c_char,
) -> DevsStatus {
    guarded(|| {
        if experiment.is_null() || out_report.is_null() {
            return fail(DevsStatus::NullPointer, "null pointer argument");
        }
        let experiment = unsafe { &*experiment };
        let component = match build_component(&experiment.config.model) {
            Ok(component) => component,
            Err(error) => return fail(status_for(&error), &error.to_string()),
        };
        let report = match &component {
            Component::Atomic(spec) => validate_atomic_spec(spec),
            Component::Coupled(spec) => spec.validate(),
        };
        unsafe { give_string(out_report, &report.to_string()) };
        if report.ok() {
            ok()
        } else {
            fail(
                DevsStatus::StructureError,
                &format!("{} structural violation(s)", report.violations().len()),
            )
        }
    })
}

/// Runs the configured coupled model both hierarchically and flattened,
/// then compares observable behavior.
///
/// On `Ok` or `NotEquivalent`, writes a one-line comparison detail to
/// `*out_detail` (caller frees it with `devs_string_free`). Other statuses
/// report why the check could not run — for instance an already-atomic
/// model.
/// # Safety
/// `experiment` must be a live handle from `devs_experiment_parse` and
/// `out_detail` must be valid for writing, both for the duration of the
/// call.
#[no_mangle]
pub unsafe extern "C" fn devs_experiment_flatten_check(
    experiment: *const DevsExperiment,
    out_detail: *mut *mut c_char,
) -> DevsStatus {
    guarded(|| {
        if experiment.is_null() || out_detail.is_null() {
            return fail(DevsStatus::NullPointer, "null pointer argument");
        }
        let experiment = unsafe { &*experiment };
        match flatten_check(&experiment.config) {
            Ok(check) => {
                unsafe { give_string(out_detail, &check.detail) };
                if check.equivalent {
                    ok()
                } else {
                    fail(
                        DevsStatus::NotEquivalent,
                        "hierarchical and flattened runs are not equivalent",
                    )
                }
            }
            Err(error) => fail(status_for(&error), &error.to_string()),
        }
    })
}

/// Releases a string returned through a `char **` out-parameter. Accepts
/// null.
/// # Safety
/// `string` must be null or a pointer received through a `char **`
/// out-parameter of this API, not yet freed; it must not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn devs_string_free(string: *mut c_char) {
    if !string.is_null() {
        drop(unsafe { CString::from_raw(string) });
    }
}
