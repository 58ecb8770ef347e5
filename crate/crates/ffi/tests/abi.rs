use std::ffi::{CStr, CString};
use std::ptr;

use otima::analysis::FringeParams;
use otima_ffi::*;

const ARGON: &str = include_str!("../../core/scenarios/argon_n1.toml");

fn last_error() -> String {
    unsafe { CStr::from_ptr(otima_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn argon() -> *mut OtimaScenario {
    let text = CString::new(ARGON).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { otima_scenario_from_toml(text.as_ptr(), &mut s) },
        OtimaStatus::Ok
    );
    assert!(!s.is_null());
    s
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(otima_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn scenario_round_trip() {
    let s = argon();
    let mut tt = 0.0;
    assert_eq!(unsafe { otima_scenario_talbot_time(s, &mut tt) }, OtimaStatus::Ok);
    assert!((tt * 1e6 - 29.29).abs() < 0.01);
    let mut at_off = 1.0;
    assert_eq!(
        unsafe { otima_normalized_signal(s, 200e-9, &mut at_off) },
        OtimaStatus::Ok
    );
    assert!(at_off.abs() < 1e-12);
    unsafe { otima_scenario_free(s) };
}

#[test]
fn scan_and_free_phase_fit() {
    let s = argon();
    let mut curve = ptr::null_mut();
    assert_eq!(unsafe { otima_scan(s, &mut curve) }, OtimaStatus::Ok);
    assert_eq!(unsafe { otima_curve_len(curve) }, 21);
    let mut first = OtimaRecord::default();
    assert_eq!(unsafe { otima_curve_get(curve, 0, &mut first) }, OtimaStatus::Ok);
    assert!((first.tau + 200e-9).abs() < 1e-15);
    assert_eq!(
        unsafe { otima_curve_get(curve, 21, &mut first) },
        OtimaStatus::InvalidArgument
    );
    assert!(last_error().contains("out of range"));

    let mut fit = OtimaFringeFit::default();
    assert_eq!(
        unsafe { otima_fit_fringe(curve, 200e-9, true, &mut fit) },
        OtimaStatus::Ok
    );
    assert!((fit.v0 - 0.146).abs() < 1e-3, "{fit:?}");
    assert!((fit.sigma_p * 1e9 - 77.3).abs() < 0.5);
    assert!(fit.tau_off_err.is_finite());
    assert!(last_error().is_empty());
    unsafe {
        otima_curve_free(curve);
        otima_scenario_free(s);
    }
}

#[test]
fn overrides_and_model_switch() {
    let s = argon();
    let mut quantum = 0.0;
    let mut classical = 0.0;
    unsafe {
        otima_normalized_signal(s, 0.0, &mut quantum);
        assert_eq!(otima_scenario_set_model(s, OtimaModel::Classical), OtimaStatus::Ok);
        otima_normalized_signal(s, 0.0, &mut classical);
    }
    assert!((quantum - classical).abs() > 1e-3);

    let path = CString::new("beam.speed_m_per_s").unwrap();
    assert_eq!(
        unsafe { otima_scenario_set(s, path.as_ptr(), -5.0) },
        OtimaStatus::Config
    );
    let mut unchanged = 0.0;
    unsafe { otima_normalized_signal(s, 0.0, &mut unchanged) };
    assert_eq!(unchanged, classical);

    let bogus = CString::new("beam.colour").unwrap();
    assert_ne!(unsafe { otima_scenario_set(s, bogus.as_ptr(), 1.0) }, OtimaStatus::Ok);
    assert!(last_error().contains("beam.colour"));
    unsafe { otima_scenario_free(s) };
}

#[test]
fn external_data_fit() {
    let taus: Vec<f64> = (0..41).map(|i| (-200.0 + 10.0 * i as f64) * 1e-9).collect();
    let truth = FringeParams {
        v0: 0.2,
        sigma_w: 76.5e-9,
        sigma_p: 77.3e-9,
        tau_off: 200e-9,
    };
    let values: Vec<f64> = taus.iter().map(|&t| truth.evaluate(t)).collect();
    let mut curve = ptr::null_mut();
    let status =
        unsafe { otima_curve_from_arrays(taus.as_ptr(), values.as_ptr(), ptr::null(), taus.len(), &mut curve) };
    assert_eq!(status, OtimaStatus::Ok);
    let mut fit = OtimaFringeFit::default();
    assert_eq!(
        unsafe { otima_fit_fringe(curve, 200e-9, false, &mut fit) },
        OtimaStatus::Ok
    );
    assert!((fit.v0 - 0.2).abs() < 1e-6);
    assert!(fit.tau_off_err.is_nan());
    unsafe { otima_curve_free(curve) };

    let mut short = ptr::null_mut();
    let status = unsafe { otima_curve_from_arrays(taus.as_ptr(), values.as_ptr(), ptr::null(), 3, &mut short) };
    assert_eq!(status, OtimaStatus::Ok);
    assert_eq!(
        unsafe { otima_fit_fringe(short, 200e-9, false, &mut fit) },
        OtimaStatus::Fit
    );
    unsafe { otima_curve_free(short) };
}

#[test]
fn errors_are_reported() {
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { otima_scenario_from_toml(ptr::null(), &mut s) },
        OtimaStatus::NullPointer
    );
    assert!(s.is_null());
    let bad = CString::new("model = \"quantum\"\n[molecule]\nmass_amu = -1\n").unwrap();
    assert_eq!(
        unsafe { otima_scenario_from_toml(bad.as_ptr(), &mut s) },
        OtimaStatus::Config
    );
    assert!(!last_error().is_empty());
    let missing = CString::new("/nonexistent/scenario.toml").unwrap();
    assert_eq!(
        unsafe { otima_scenario_from_file(missing.as_ptr(), &mut s) },
        OtimaStatus::Io
    );
    assert_eq!(
        unsafe { otima_scenario_talbot_time(ptr::null(), ptr::null_mut()) },
        OtimaStatus::NullPointer
    );
    assert_eq!(unsafe { otima_curve_len(ptr::null()) }, 0);
    unsafe {
        otima_scenario_free(ptr::null_mut());
        otima_curve_free(ptr::null_mut());
    }
}

#[test]
fn errors_are_per_thread() {
    assert_eq!(
        unsafe { otima_scenario_talbot_time(ptr::null(), ptr::null_mut()) },
        OtimaStatus::NullPointer
    );
    let other = std::thread::spawn(last_error).join().unwrap();
    assert!(other.is_empty());
    assert!(!last_error().is_empty());
}
