use serde::Serialize;

use crate::error::{Error, Result};
use crate::interferometer::SignalCurve;

/// Point-by-point comparison of two S_N curves on the same τ grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub points: usize,
    /// max |S_N| of the reference curve; deviations are divided by it
    pub scale: f64,
    pub max_deviation: f64,
    pub max_deviation_tau: f64,
    pub rms_deviation: f64,
    /// max |ΔS_N|/σ when the oracle carries statistical errors
    pub max_sigma_deviation: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    /// τ values (s) that exceed the tolerance
    pub failures: Vec<f64>,
}

fn check_grids(a: &SignalCurve, b: &SignalCurve) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!("{} vs {} points", a.len(), b.len())));
    }
    for (i, (x, y)) in a.records().iter().zip(b.records()).enumerate() {
        let tol = 1e-9 * x.tau.abs().max(y.tau.abs()).max(1e-12);
        if (x.tau - y.tau).abs() > tol {
            return Err(Error::GridMismatch(format!(
                "point {i}: tau {:e} vs {:e}",
                x.tau, y.tau
            )));
        }
    }
    Ok(())
}

/// Relative comparison: |ΔS_N| / max|S_N(analytic)| must stay below `tolerance`.
/// A flat reference curve falls back to absolute deviations.
pub fn compare(analytic: &SignalCurve, oracle: &SignalCurve, tolerance: f64) -> Result<ComparisonReport> {
    check_grids(analytic, oracle)?;
    let max_abs = analytic.records().iter().map(|r| r.s_n.abs()).fold(0.0, f64::max);
    let scale = if max_abs > 0.0 { max_abs } else { 1.0 };
    let deviations: Vec<(f64, f64)> = analytic
        .records()
        .iter()
        .zip(oracle.records())
        .map(|(a, o)| (a.tau, (a.s_n - o.s_n).abs() / scale))
        .collect();
    Ok(report(analytic, scale, deviations, tolerance, None))
}

/// |Δ|/σ; points without statistical error (the reference point itself)
/// only pass when they agree exactly.
fn pull(delta: f64, sigma: f64) -> f64 {
    if sigma > 0.0 {
        delta.abs() / sigma
    } else if delta.abs() <= 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Statistical comparison: every |ΔS_N| must stay below `n_sigma` times the
/// oracle's standard error.
pub fn compare_statistical(analytic: &SignalCurve, oracle: &SignalCurve, n_sigma: f64) -> Result<ComparisonReport> {
    check_grids(analytic, oracle)?;
    let max_abs = analytic.records().iter().map(|r| r.s_n.abs()).fold(0.0, f64::max);
    let scale = if max_abs > 0.0 { max_abs } else { 1.0 };
    let pulls: Vec<(f64, f64)> = analytic
        .records()
        .iter()
        .zip(oracle.records())
        .map(|(a, o)| (a.tau, pull(a.s_n - o.s_n, o.sigma_sn)))
        .collect();
    let max_pull = pulls.iter().map(|p| p.1).fold(0.0, f64::max);
    let deviations = analytic
        .records()
        .iter()
        .zip(oracle.records())
        .map(|(a, o)| (a.tau, (a.s_n - o.s_n).abs() / scale))
        .collect();
    let mut r = report(analytic, scale, deviations, f64::INFINITY, Some(max_pull));
    r.tolerance = n_sigma;
    r.failures = pulls.iter().filter(|p| p.1 > n_sigma).map(|p| p.0).collect();
    r.pass = r.failures.is_empty();
    Ok(r)
}

fn report(
    analytic: &SignalCurve,
    scale: f64,
    deviations: Vec<(f64, f64)>,
    tolerance: f64,
    max_sigma_deviation: Option<f64>,
) -> ComparisonReport {
    let (max_deviation_tau, max_deviation) = deviations.iter().copied().fold(
        (analytic.records()[0].tau, 0.0),
        |acc, (t, d)| if d > acc.1 { (t, d) } else { acc },
    );
    let rms = (deviations.iter().map(|(_, d)| d * d).sum::<f64>() / deviations.len() as f64).sqrt();
    let failures: Vec<f64> = deviations
        .iter()
        .filter(|(_, d)| *d > tolerance)
        .map(|(t, _)| *t)
        .collect();
    ComparisonReport {
        points: deviations.len(),
        scale,
        max_deviation,
        max_deviation_tau,
        rms_deviation: rms,
        max_sigma_deviation,
        tolerance,
        pass: failures.is_empty(),
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interferometer::SignalRecord;

    fn curve(values: &[f64]) -> SignalCurve {
        SignalCurve::new(
            values
                .iter()
                .enumerate()
                .map(|(i, &s_n)| SignalRecord {
                    tau: i as f64 * 1e-8,
                    s_res: 1.0 + s_n,
                    s_off: 1.0,
                    s_n,
                    sigma_sn: 0.01,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identical_curves_pass() {
        let a = curve(&[0.1, -0.2, 0.05]);
        let r = compare(&a, &a, 1e-3).unwrap();
        assert_eq!(r.max_deviation, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn one_percent_error_fails_at_that_point() {
        let a = curve(&[0.1, -0.2, 0.05]);
        let b = curve(&[0.1, -0.2, 0.05 + 0.002]);
        let r = compare(&a, &b, 1e-3).unwrap();
        assert!(!r.pass);
        assert_eq!(r.failures, vec![2e-8]);
        assert_eq!(r.max_deviation_tau, 2e-8);
        assert!((r.max_deviation - 0.01).abs() < 1e-12);
    }

    #[test]
    fn grids_must_match() {
        let a = curve(&[0.1, 0.2]);
        let b = curve(&[0.1, 0.2, 0.3]);
        assert!(matches!(compare(&a, &b, 1e-3), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn statistical_pulls() {
        let a = curve(&[0.1, -0.2]);
        let b = curve(&[0.12, -0.2]);
        let r = compare_statistical(&a, &b, 3.0).unwrap();
        assert!(r.pass);
        assert!((r.max_sigma_deviation.unwrap() - 2.0).abs() < 1e-9);
        let c = curve(&[0.14, -0.2]);
        assert!(!compare_statistical(&a, &c, 3.0).unwrap().pass);
    }
}
