//! C interface.
//!
//! Systems and analyses are opaque handles created and destroyed through
//! this API. Every fallible call returns a [`CplStatus`]; on failure a
//! message is available from [`cpl_last_error`] on the same thread. Node
//! indices are 0-based.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cpl_core::input::parse_network;
use cpl_core::report::AnalysisReport;
use cpl_core::{
    classify, validate_system, Analysis, ClassifyOptions, Error, IntegrationOptions, Outcome,
    SystemData,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CplStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    /// The system fails the structural checks on `A`.
    Invalid = 4,
    Dimension = 5,
    Options = 6,
    /// The requested quantity does not exist for this outcome.
    NotAvailable = 7,
    BufferTooSmall = 8,
    Numerical = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CplOutcome {
    Dominant = 0,
    NoEquilibrium = 1,
    Inconclusive = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CplOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub collapse_threshold: f64,
    pub converge_tol: f64,
    pub max_time: f64,
    pub max_steps: u64,
    pub safety: f64,
    pub hyper_tol: f64,
}

impl From<CplOptions> for ClassifyOptions {
    fn from(o: CplOptions) -> Self {
        ClassifyOptions {
            integration: IntegrationOptions {
                rel_tol: o.rel_tol,
                abs_tol: o.abs_tol,
                collapse_threshold: o.collapse_threshold,
                converge_tol: o.converge_tol,
                max_time: o.max_time,
                max_steps: usize::try_from(o.max_steps).unwrap_or(usize::MAX),
            },
            safety: o.safety,
            hyper_tol: o.hyper_tol,
        }
    }
}

/// Opaque.
pub struct CplSystem {
    model: &'static str,
    sys: SystemData,
}

/// Opaque.
pub struct CplAnalysis {
    model: &'static str,
    options: ClassifyOptions,
    analysis: Analysis,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CplStatus {
    match e {
        Error::Parse(_) | Error::Malformed(_) => CplStatus::Parse,
        Error::Invalid(_) => CplStatus::Invalid,
        Error::Dimension(_) => CplStatus::Dimension,
        Error::Options(_) | Error::Sweep(_) | Error::SeedMargin { .. } => CplStatus::Options,
        Error::NonFinite(_) | Error::Domain { .. } => CplStatus::Parse,
        _ => CplStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (CplStatus, String)>) -> CplStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CplStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CplStatus::Panic
        }
    }
}

fn core_err(e: Error) -> (CplStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CplStatus, String) {
    (CplStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (CplStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cpl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn cpl_options_default() -> CplOptions {
    let d = ClassifyOptions::default();
    CplOptions {
        rel_tol: d.integration.rel_tol,
        abs_tol: d.integration.abs_tol,
        collapse_threshold: d.integration.collapse_threshold,
        converge_tol: d.integration.converge_tol,
        max_time: d.integration.max_time,
        max_steps: d.integration.max_steps as u64,
        safety: d.safety,
        hyper_tol: d.hyper_tol,
    }
}

/// Builds a system from `A` (row-major, `n * n`), `b` and `w` (length `n`).
///
/// # Safety
/// The arrays must hold the stated number of doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpl_system_new(
    n: usize,
    a: *const f64,
    b: *const f64,
    w: *const f64,
    out: *mut *mut CplSystem,
) -> CplStatus {
    guard(|| {
        if a.is_null() || b.is_null() || w.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        if n == 0 {
            return Err((CplStatus::Dimension, "n must be positive".into()));
        }
        let a = std::slice::from_raw_parts(a, n * n);
        let rows: Vec<Vec<f64>> = a.chunks(n).map(<[f64]>::to_vec).collect();
        let b = std::slice::from_raw_parts(b, n).to_vec();
        let w = std::slice::from_raw_parts(w, n).to_vec();
        let sys = SystemData::from_rows(&rows, b, w).map_err(core_err)?;
        *out = Box::into_raw(Box::new(CplSystem { model: "raw", sys }));
        Ok(())
    })
}

/// Parses a network document (any supported model) and reduces it.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpl_system_from_json(json: *const c_char, out: *mut *mut CplSystem) -> CplStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (CplStatus::InvalidUtf8, e.to_string()))?;
        let spec = parse_network(text).map_err(core_err)?;
        let sys = spec.reduce().map_err(core_err)?;
        *out = Box::into_raw(Box::new(CplSystem { model: spec.kind(), sys }));
        Ok(())
    })
}

/// # Safety
/// `sys` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn cpl_system_free(sys: *mut CplSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// # Safety
/// `sys` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn cpl_system_dim(sys: *const CplSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.sys.dim())
}

/// Runs the structural checks; `passed` receives the verdict.
///
/// # Safety
/// `sys` must be a live handle; `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpl_system_validate(sys: *const CplSystem, passed: *mut bool) -> CplStatus {
    guard(|| {
        let s = as_ref(sys, "system")?;
        if passed.is_null() {
            return Err(null("passed"));
        }
        let report = validate_system(&s.sys);
        if !report.passed {
            set_error(report.summary());
        }
        *passed = report.passed;
        Ok(())
    })
}

/// Classifies the system. `options` may be null for defaults.
///
/// # Safety
/// `sys` must be a live handle, `options` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cpl_analyze(
    sys: *const CplSystem,
    options: *const CplOptions,
    out: *mut *mut CplAnalysis,
) -> CplStatus {
    guard(|| {
        let s = as_ref(sys, "system")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let options: ClassifyOptions = options.as_ref().copied().unwrap_or_else(|| cpl_options_default()).into();
        let analysis = classify(&s.sys, &options).map_err(core_err)?;
        *out = Box::into_raw(Box::new(CplAnalysis { model: s.model, options, analysis }));
        Ok(())
    })
}

/// # Safety
/// `an` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn cpl_analysis_free(an: *mut CplAnalysis) {
    if !an.is_null() {
        drop(Box::from_raw(an));
    }
}

/// # Safety
/// `an` must be a live handle; `outcome` writable.
#[no_mangle]
pub unsafe extern "C" fn cpl_analysis_outcome(an: *const CplAnalysis, outcome: *mut CplOutcome) -> CplStatus {
    guard(|| {
        let a = as_ref(an, "analysis")?;
        if outcome.is_null() {
            return Err(null("outcome"));
        }
        *outcome = match a.analysis.outcome {
            Outcome::Dominant { .. } => CplOutcome::Dominant,
            Outcome::NoEquilibrium { .. } => CplOutcome::NoEquilibrium,
            Outcome::Inconclusive { .. } => CplOutcome::Inconclusive,
        };
        Ok(())
    })
}

/// Copies the dominant equilibrium into `out[0..len]`; `len` must be at
/// least the system dimension.
///
/// # Safety
/// `an` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cpl_analysis_x_max(an: *const CplAnalysis, out: *mut f64, len: usize) -> CplStatus {
    guard(|| {
        let a = as_ref(an, "analysis")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let x = a
            .analysis
            .outcome
            .x_max()
            .ok_or((CplStatus::NotAvailable, "no dominant equilibrium".to_string()))?;
        if len < x.len() {
            return Err((CplStatus::BufferTooSmall, format!("need {} doubles", x.len())));
        }
        std::slice::from_raw_parts_mut(out, x.len()).copy_from_slice(x);
        Ok(())
    })
}

/// Writes the collapsed coordinates (0-based) into `out[0..len]` and their
/// number into `count`. With `out` null only `count` is written.
///
/// # Safety
/// `an` must be a live handle; `out` null or holding `len` entries; `count`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn cpl_analysis_collapsed(
    an: *const CplAnalysis,
    out: *mut usize,
    len: usize,
    count: *mut usize,
) -> CplStatus {
    guard(|| {
        let a = as_ref(an, "analysis")?;
        if count.is_null() {
            return Err(null("count"));
        }
        let Outcome::NoEquilibrium { collapsed, .. } = &a.analysis.outcome else {
            return Err((CplStatus::NotAvailable, "no collapse in this analysis".into()));
        };
        *count = collapsed.len();
        if out.is_null() {
            return Ok(());
        }
        if len < collapsed.len() {
            return Err((CplStatus::BufferTooSmall, format!("need {} entries", collapsed.len())));
        }
        std::slice::from_raw_parts_mut(out, collapsed.len()).copy_from_slice(collapsed);
        Ok(())
    })
}

/// Whether the Jacobian at the dominant equilibrium is Hurwitz.
///
/// # Safety
/// `an` must be a live handle; `stable` writable.
#[no_mangle]
pub unsafe extern "C" fn cpl_analysis_long_term_stable(an: *const CplAnalysis, stable: *mut bool) -> CplStatus {
    guard(|| {
        let a = as_ref(an, "analysis")?;
        if stable.is_null() {
            return Err(null("stable"));
        }
        let Outcome::Dominant { stability, .. } = &a.analysis.outcome else {
            return Err((CplStatus::NotAvailable, "no dominant equilibrium".into()));
        };
        *stable = stability.long_term_stable;
        Ok(())
    })
}

/// Full report as JSON (1-based node numbers, no timings). Release with
/// [`cpl_string_free`].
///
/// # Safety
/// `an` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cpl_analysis_report_json(an: *const CplAnalysis, out: *mut *mut c_char) -> CplStatus {
    guard(|| {
        let a = as_ref(an, "analysis")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let report = AnalysisReport::new(a.model, &a.analysis, &a.options);
        let text = serde_json::to_string(&report).map_err(|e| (CplStatus::Numerical, e.to_string()))?;
        *out = CString::new(text).map_err(|e| (CplStatus::Numerical, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn cpl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
