//! Beam angles from the fitted fringe widths and their forward maps.

use std::f64::consts::LN_10;

use serde::Serialize;

use super::fringe::FringeFit;
use crate::error::{Error, Result};

fn check_positive(op: &'static str, pairs: &[(&str, f64)]) -> Result<()> {
    for (name, value) in pairs {
        if !(*value > 0.0 && value.is_finite()) {
            return Err(Error::domain(op, format!("{name} must be positive, got {value:e}")));
        }
    }
    Ok(())
}

fn asin_checked(op: &'static str, x: f64, what: &str) -> Result<f64> {
    if x > 1.0 {
        return Err(Error::domain(
            op,
            format!("unphysical {what}: arcsin argument {x:.6} exceeds 1"),
        ));
    }
    Ok(x.asin())
}

/// α = arcsin(d / (2 v σ_w √(2 ln 10))).
pub fn divergence_from_width(sigma_w: f64, d: f64, v: f64) -> Result<f64> {
    let op = "divergence_from_width";
    check_positive(op, &[("sigma_w", sigma_w), ("d", d), ("v", v)])?;
    asin_checked(op, d / (2.0 * v * sigma_w * (2.0 * LN_10).sqrt()), "width")
}

/// σ_w = d / (2 v sin α √(2 ln 10)).
pub fn width_from_divergence(alpha: f64, d: f64, v: f64) -> Result<f64> {
    check_positive("width_from_divergence", &[("alpha", alpha), ("d", d), ("v", v)])?;
    Ok(d / (2.0 * v * alpha.sin() * (2.0 * LN_10).sqrt()))
}

/// γ = arcsin(d / (v σ_p)).
pub fn tilt_from_period(sigma_p: f64, d: f64, v: f64) -> Result<f64> {
    let op = "tilt_from_period";
    check_positive(op, &[("sigma_p", sigma_p), ("d", d), ("v", v)])?;
    asin_checked(op, d / (v * sigma_p), "period")
}

/// σ_p = d / (v sin γ).
pub fn period_from_tilt(gamma: f64, d: f64, v: f64) -> Result<f64> {
    check_positive("period_from_tilt", &[("gamma", gamma), ("d", d), ("v", v)])?;
    Ok(d / (v * gamma.sin()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeamAngles {
    pub alpha: f64,
    pub alpha_err: f64,
    pub gamma: f64,
    pub gamma_err: f64,
}

/// Both angles with first-order error propagation. For x = c/σ,
/// dθ/dσ = −x/(σ√(1−x²)).
pub fn extract_angles(fit: &FringeFit, d: f64, v: f64) -> Result<BeamAngles> {
    let p = &fit.params;
    let u = &fit.uncertainties;
    let alpha = divergence_from_width(p.sigma_w, d, v)?;
    let gamma = tilt_from_period(p.sigma_p, d, v)?;
    let propagate = |theta: f64, sigma: f64, err: f64| {
        let x = theta.sin();
        x / (sigma * (1.0 - x * x).sqrt()) * err
    };
    Ok(BeamAngles {
        alpha,
        alpha_err: propagate(alpha, p.sigma_w, u.sigma_w),
        gamma,
        gamma_err: propagate(gamma, p.sigma_p, u.sigma_p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const D: f64 = 78.8e-9;

    #[test]
    fn argon_angles() {
        let alpha = divergence_from_width(76.5e-9, D, 600.0).unwrap();
        let gamma = tilt_from_period(77.3e-9, D, 600.0).unwrap();
        assert!((alpha - 0.4e-3).abs() < 0.005e-3, "{alpha}");
        assert!((gamma - 1.7e-3).abs() < 0.005e-3, "{gamma}");
        // frozen: 78.8e-9/(2·600·76.5e-9·√(2 ln 10)) and 78.8e-9/(600·77.3e-9)
        assert!((alpha - 4.000_006_579_502_8e-4).abs() < 1e-15);
        assert!((gamma - 1.699_009_010_588_8e-3).abs() < 1e-15);
    }

    #[test]
    fn forward_maps_invert() {
        for &a in &[1e-5, 4e-4, 1e-2, 0.3] {
            let w = width_from_divergence(a, D, 600.0).unwrap();
            assert!((divergence_from_width(w, D, 600.0).unwrap() - a).abs() < 1e-9 * a);
            let p = period_from_tilt(a, D, 600.0).unwrap();
            assert!((tilt_from_period(p, D, 600.0).unwrap() - a).abs() < 1e-9 * a);
        }
    }

    #[test]
    fn doubling_speed_halves_divergence() {
        let a1 = divergence_from_width(76.5e-9, D, 600.0).unwrap();
        let a2 = divergence_from_width(76.5e-9, D, 1200.0).unwrap();
        assert!((a1 / a2 - 2.0).abs() < 1e-6);
    }

    #[test]
    fn tilt_vanishes_for_long_periods() {
        assert!(tilt_from_period(1e3, D, 600.0).unwrap() < 1e-12);
    }

    #[test]
    fn unphysical_arguments() {
        assert!(matches!(
            divergence_from_width(1e-12, D, 600.0),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(tilt_from_period(1e-12, D, 600.0), Err(Error::Domain { .. })));
        assert!(tilt_from_period(-1.0, D, 600.0).is_err());
    }
}
