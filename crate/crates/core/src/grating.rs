//! Pulsed standing-light-wave gratings: strengths, transmission functions and
//! the quantum / classical Talbot coefficients.
//!
//! Coefficients are computed from the coherent transmission
//! `t(x) = exp((-n0_eff/2 + i phi0_eff) cos²(πx/d))` and expressed through the
//! Bessel–Clifford function, which keeps the result real for every sign of
//! the discriminant and has no removable singularities:
//!
//! ```text
//! A = -(n0/2) cos(πχ),  B = φ0 sin(πχ)          (quantum)
//! A = -(n0/2),          B = φ0 πχ               (classical)
//! P = A + B,  Q = B - A
//! B_n  = e^{-n0/2} (P/2)^n  C_n(-PQ/4)          n ≥ 0
//! B_-n = e^{-n0/2} (-Q/2)^n C_n(-PQ/4)
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::bessel::{bessel_clifford, bessel_i_scaled};
use crate::constants::{PLANCK, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

/// Mean number of photons absorbed in an antinode, n₀ = 4σEλ/(hcA).
pub fn mean_absorbed_photons(pulse_energy: f64, cross_section: f64, wavelength: f64, area: f64) -> Result<f64> {
    if !(area > 0.0) {
        return Err(Error::domain(
            "mean_absorbed_photons",
            "illuminated area must be positive",
        ));
    }
    if pulse_energy < 0.0 || cross_section < 0.0 || wavelength < 0.0 {
        return Err(Error::domain("mean_absorbed_photons", "inputs must be non-negative"));
    }
    Ok(4.0 * cross_section * pulse_energy * wavelength / (PLANCK * SPEED_OF_LIGHT * area))
}

/// Eikonal phase in an antinode, φ₀ = 16π²Eα_vol/(hcA).
pub fn eikonal_phase(pulse_energy: f64, polarizability_volume: f64, area: f64) -> Result<f64> {
    if !(area > 0.0) {
        return Err(Error::domain("eikonal_phase", "illuminated area must be positive"));
    }
    if pulse_energy < 0.0 || polarizability_volume < 0.0 {
        return Err(Error::domain("eikonal_phase", "inputs must be non-negative"));
    }
    Ok(16.0 * PI * PI * pulse_energy * polarizability_volume / (PLANCK * SPEED_OF_LIGHT * area))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GratingStrength {
    pub n0: f64,
    pub phi0: f64,
    pub n0_eff: f64,
    pub phi0_eff: f64,
    /// n0/(2 phi0); infinite for a purely absorptive grating, zero without absorption.
    pub beta: f64,
}

impl GratingStrength {
    pub fn from_nominal(n0: f64, phi0: f64, reflectivity: f64, coherence: f64) -> Result<Self> {
        if !(n0 >= 0.0 && n0.is_finite() && phi0.is_finite()) {
            return Err(Error::domain("GratingStrength", "n0 must be finite and non-negative"));
        }
        let rc = reflectivity * coherence;
        if !(rc > 0.0 && rc <= 1.0) {
            return Err(Error::domain("GratingStrength", "R·C must lie in (0, 1]"));
        }
        Ok(GratingStrength {
            n0,
            phi0,
            n0_eff: rc * n0,
            phi0_eff: rc * phi0,
            beta: ratio_beta(n0, phi0),
        })
    }

    /// Strength specified directly by its effective values (R = C = 1).
    pub fn from_effective(n0_eff: f64, phi0_eff: f64) -> Result<Self> {
        Self::from_nominal(n0_eff, phi0_eff, 1.0, 1.0)
    }

    /// Effective strength n0_eff with the phase fixed by β.
    pub fn from_beta(n0_eff: f64, beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::domain("GratingStrength::from_beta", "β must be positive"));
        }
        Self::from_effective(n0_eff, n0_eff / (2.0 * beta))
    }

    pub fn none() -> Self {
        GratingStrength {
            n0: 0.0,
            phi0: 0.0,
            n0_eff: 0.0,
            phi0_eff: 0.0,
            beta: 0.0,
        }
    }
}

fn ratio_beta(n0: f64, phi0: f64) -> f64 {
    if phi0 > 0.0 {
        n0 / (2.0 * phi0)
    } else if n0 > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Grating transmission with the reflectivity/coherence prefactor
/// t(x) = exp(-n_eff(x)(1+R)/(4RC) + i φ_eff(x)).
pub fn transmission_function(
    x: f64,
    strength: &GratingStrength,
    period: f64,
    reflectivity: f64,
    coherence: f64,
) -> Result<Complex64> {
    if !(period > 0.0) {
        return Err(Error::domain("transmission_function", "period must be positive"));
    }
    let rc = reflectivity * coherence;
    if !(rc > 0.0) {
        return Err(Error::domain("transmission_function", "R·C must be positive"));
    }
    let profile = (PI * x / period).cos().powi(2);
    let absorption = strength.n0_eff * profile * (1.0 + reflectivity) / (4.0 * rc);
    Ok(Complex64::new(-absorption, strength.phi0_eff * profile).exp())
}

/// Coherent transmission exp((-n0_eff/2 + i φ0_eff) cos²(πx/d)) whose
/// two-point Fourier coefficients are the Talbot coefficients.
pub fn coherent_transmission(x: f64, strength: &GratingStrength, period: f64) -> Complex64 {
    let profile = (PI * x / period).cos().powi(2);
    Complex64::new(-strength.n0_eff / 2.0, strength.phi0_eff)
        .scale(profile)
        .exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientModel {
    Quantum,
    Classical,
    Absorptive,
}

impl CoefficientModel {
    pub fn as_str(self) -> &'static str {
        match self {
            CoefficientModel::Quantum => "quantum",
            CoefficientModel::Classical => "classical",
            CoefficientModel::Absorptive => "absorptive",
        }
    }
}

impl From<crate::scenario::Model> for CoefficientModel {
    fn from(m: crate::scenario::Model) -> Self {
        match m {
            crate::scenario::Model::Quantum => CoefficientModel::Quantum,
            crate::scenario::Model::Classical => CoefficientModel::Classical,
        }
    }
}

/// Talbot coefficient B_n(χ) (quantum), C_n(χ) (classical) or the χ-independent
/// absorptive value (-1)ⁿ e^{-n0/2} I_n(n0/2), all with effective strengths.
pub fn talbot_coefficient(order: i32, chi: f64, strength: &GratingStrength, model: CoefficientModel) -> f64 {
    let half = strength.n0_eff / 2.0;
    let (a, b) = match model {
        CoefficientModel::Absorptive => return absorptive_coefficient(order, strength.n0_eff),
        CoefficientModel::Quantum => {
            let (s, c) = (PI * chi).sin_cos();
            (-half * c, strength.phi0_eff * s)
        }
        CoefficientModel::Classical => (-half, strength.phi0_eff * PI * chi),
    };
    clifford_coefficient(order, a, b, half)
}

/// (-1)ⁿ e^{-n0/2} I_n(n0/2).
pub fn absorptive_coefficient(order: i32, n0_eff: f64) -> f64 {
    let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
    sign * bessel_i_scaled(order, n0_eff / 2.0)
}

fn clifford_coefficient(order: i32, a: f64, b: f64, half_n0: f64) -> f64 {
    let (p, q) = (a + b, b - a);
    let m = order.unsigned_abs();
    let base = if order >= 0 { p } else { -q };
    let discriminant = p * q;
    let z = -discriminant / 4.0;
    if z <= 36.0 {
        return (-half_n0).exp() * (base / 2.0).powi(m as i32) * bessel_clifford(m, z);
    }
    // I-type branch with y ≤ n0/2, so e^{y - n0/2} never overflows
    let y = (-discriminant).sqrt();
    (y - half_n0).exp() * (base / y).powi(m as i32) * bessel_i_scaled(m as i32, y)
}

/// Direct numerical two-point Fourier coefficient
/// (1/d)∫ t(x - χd/2) t*(x + χd/2) e^{-2πinx/d} dx by the periodic trapezoid
/// rule on `points` nodes. Independent of the closed form; used as its oracle.
pub fn talbot_coefficient_fourier(order: i32, chi: f64, strength: &GratingStrength, points: usize) -> Complex64 {
    let m = points.max(8);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..m {
        let x = j as f64 / m as f64;
        let kernel = coherent_transmission(x - chi / 2.0, strength, 1.0)
            * coherent_transmission(x + chi / 2.0, strength, 1.0).conj();
        acc += kernel * Complex64::from_polar(1.0, -2.0 * PI * order as f64 * x);
    }
    acc / m as f64
}
