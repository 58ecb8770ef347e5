//! C ABI for otima.
//!
//! Every fallible call returns an [`OtimaStatus`]; on failure the message is
//! available from [`otima_last_error_message`] on the same thread. Handles are
//! opaque and owned by the caller, who releases them with the matching
//! `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use otima::analysis::{fit_fringe, PhaseMode};
use otima::cli::sweep::ParameterPath;
use otima::interferometer::{SignalCurve, SignalModel, SignalRecord};
use otima::scenario::{load_scenario, load_scenario_file, Model, Scenario};
use otima::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OtimaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Domain = 4,
    Numerical = 5,
    Fit = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OtimaModel {
    Quantum = 0,
    Classical = 1,
}

/// Scenario handle.
pub struct OtimaScenario(Scenario);

/// Signal curve handle.
pub struct OtimaCurve(SignalCurve);

/// One scan point; times in s.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OtimaRecord {
    pub tau: f64,
    pub s_res: f64,
    pub s_off: f64,
    pub s_n: f64,
    pub sigma_sn: f64,
}

/// Fitted fringe parameters with one-sigma errors, SI units.
/// `tau_off_err` is NaN for fixed-phase fits.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OtimaFringeFit {
    pub v0: f64,
    pub sigma_w: f64,
    pub sigma_p: f64,
    pub tau_off: f64,
    pub v0_err: f64,
    pub sigma_w_err: f64,
    pub sigma_p_err: f64,
    pub tau_off_err: f64,
    pub chi2: f64,
    pub dof: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(OtimaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Config { .. } | Error::Parse { .. } | Error::Degenerate(_) => OtimaStatus::Config,
            Error::Domain { .. } => OtimaStatus::Domain,
            Error::BesselOverflow { .. } | Error::Resolution { .. } => OtimaStatus::Numerical,
            Error::Fit(_) => OtimaStatus::Fit,
            Error::Io { .. } | Error::Json(_) | Error::Csv(_) => OtimaStatus::Io,
            _ => OtimaStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = text);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OtimaStatus {
    set_last_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OtimaStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            OtimaStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(OtimaStatus::NullPointer, format!("{what} is NULL"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(OtimaStatus::InvalidArgument, message.into())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn otima_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, empty after a success.
/// Valid until the next otima call on the same thread.
#[no_mangle]
pub extern "C" fn otima_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parse a scenario from TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn otima_scenario_from_toml(toml: *const c_char, out: *mut *mut OtimaScenario) -> OtimaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let scenario = load_scenario(str_arg(toml, "toml")?)?;
        *out = Box::into_raw(Box::new(OtimaScenario(scenario)));
        Ok(())
    })
}

/// Load a scenario from a TOML file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn otima_scenario_from_file(path: *const c_char, out: *mut *mut OtimaScenario) -> OtimaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let scenario = load_scenario_file(str_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(OtimaScenario(scenario)));
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn otima_scenario_free(scenario: *mut OtimaScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn otima_scenario_set_model(scenario: *mut OtimaScenario, model: OtimaModel) -> OtimaStatus {
    guard(|| {
        out_arg(scenario, "scenario")?.0.model = match model {
            OtimaModel::Quantum => Model::Quantum,
            OtimaModel::Classical => Model::Classical,
        };
        Ok(())
    })
}

/// Override one parameter, e.g. `"beam.tilt_mrad"` or `"gratings.*.n0_eff"`.
/// The scenario is left unchanged when the new value is rejected.
///
/// # Safety
/// `scenario` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn otima_scenario_set(
    scenario: *mut OtimaScenario,
    path: *const c_char,
    value: f64,
) -> OtimaStatus {
    guard(|| {
        let scenario = out_arg(scenario, "scenario")?;
        let path: ParameterPath = str_arg(path, "path")?.parse()?;
        let mut updated = scenario.0.clone();
        path.apply(&mut updated, value)?;
        scenario.0 = updated;
        Ok(())
    })
}

/// Talbot time m d²/h in s.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn otima_scenario_talbot_time(scenario: *const OtimaScenario, out: *mut f64) -> OtimaStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(scenario, "scenario")?.0.talbot_time();
        Ok(())
    })
}

/// Normalized signal S_N at delay `tau` (s) for the scenario's model.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn otima_normalized_signal(
    scenario: *const OtimaScenario,
    tau: f64,
    out: *mut f64,
) -> OtimaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let model = SignalModel::new(&ref_arg(scenario, "scenario")?.0)?;
        *out = model.normalized_signal(tau)?;
        Ok(())
    })
}

/// Scan the scenario's τ grid with its model.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn otima_scan(scenario: *const OtimaScenario, out: *mut *mut OtimaCurve) -> OtimaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let s = &ref_arg(scenario, "scenario")?.0;
        let curve = SignalModel::new(s)?.scan(&s.timing.tau_grid())?;
        *out = Box::into_raw(Box::new(OtimaCurve(curve)));
        Ok(())
    })
}

/// Build a curve from measured S_N values with S_off = 1. `sigma` may be
/// NULL for unweighted data; `tau` (s) must be strictly increasing.
///
/// # Safety
/// `tau`, `s_n` and a non-NULL `sigma` must each point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn otima_curve_from_arrays(
    tau: *const f64,
    s_n: *const f64,
    sigma: *const f64,
    len: usize,
    out: *mut *mut OtimaCurve,
) -> OtimaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        if tau.is_null() || s_n.is_null() {
            return Err(null("tau or s_n"));
        }
        if len == 0 {
            return Err(invalid("len is 0"));
        }
        let taus = std::slice::from_raw_parts(tau, len);
        let values = std::slice::from_raw_parts(s_n, len);
        let sigmas = (!sigma.is_null()).then(|| std::slice::from_raw_parts(sigma, len));
        let records = (0..len)
            .map(|i| SignalRecord {
                tau: taus[i],
                s_res: 1.0 + values[i],
                s_off: 1.0,
                s_n: values[i],
                sigma_sn: sigmas.map_or(0.0, |s| s[i]),
            })
            .collect();
        *out = Box::into_raw(Box::new(OtimaCurve(SignalCurve::new(records)?)));
        Ok(())
    })
}

/// Number of records, 0 for NULL.
///
/// # Safety
/// `curve` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn otima_curve_len(curve: *const OtimaCurve) -> usize {
    curve.as_ref().map_or(0, |c| c.0.len())
}

/// # Safety
/// `curve` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn otima_curve_get(curve: *const OtimaCurve, index: usize, out: *mut OtimaRecord) -> OtimaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let records = ref_arg(curve, "curve")?.0.records();
        let r = records
            .get(index)
            .ok_or_else(|| invalid(format!("index {index} out of range for {} records", records.len())))?;
        *out = OtimaRecord {
            tau: r.tau,
            s_res: r.s_res,
            s_off: r.s_off,
            s_n: r.s_n,
            sigma_sn: r.sigma_sn,
        };
        Ok(())
    })
}

/// # Safety
/// `curve` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn otima_curve_free(curve: *mut OtimaCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// Fit the fringe model to a curve. With `free_phase` false the phase is
/// pinned to `tau_off` (s); otherwise `tau_off` is fitted.
///
/// # Safety
/// `curve` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn otima_fit_fringe(
    curve: *const OtimaCurve,
    tau_off: f64,
    free_phase: bool,
    out: *mut OtimaFringeFit,
) -> OtimaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let mode = if free_phase { PhaseMode::Free } else { PhaseMode::Fixed };
        let fit = fit_fringe(&ref_arg(curve, "curve")?.0, tau_off, mode, None)?;
        let (p, u) = (fit.params, fit.uncertainties);
        *out = OtimaFringeFit {
            v0: p.v0,
            sigma_w: p.sigma_w,
            sigma_p: p.sigma_p,
            tau_off: p.tau_off,
            v0_err: u.v0,
            sigma_w_err: u.sigma_w,
            sigma_p_err: u.sigma_p,
            tau_off_err: u.tau_off.unwrap_or(f64::NAN),
            chi2: fit.chi2,
            dof: fit.dof,
        };
        Ok(())
    })
}
