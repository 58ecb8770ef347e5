//! Saturation fit N(φ) = N₀ (1 − e^{−σφ}) for the photo-ionization cross section.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::lm::{minimize, LeastSquares};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluencePoint {
    /// photons/m²
    pub fluence: f64,
    pub counts: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossSectionFit {
    /// m²
    pub sigma_pi: f64,
    pub sigma_pi_err: f64,
    pub n0: f64,
    pub n0_err: f64,
    /// covariance of (σ_PI, N₀), SI units
    pub covariance: [[f64; 2]; 2],
    pub residuals: Vec<f64>,
    pub residual_rms: f64,
    /// largest σφ reached by the data; below 1 the plateau is barely sampled
    pub max_depletion: f64,
}

pub fn saturation_model(sigma_pi: f64, n0: f64, fluence: f64) -> f64 {
    n0 * -(-sigma_pi * fluence).exp_m1()
}

/// Parameters are scaled: u = σ φ_max, a = N₀ / N_max.
struct Problem {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl LeastSquares for Problem {
    fn n_params(&self) -> usize {
        2
    }

    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.x.len(),
            self.x
                .iter()
                .zip(&self.y)
                .map(|(&x, &y)| y - saturation_model(p[0], p[1], x)),
        )
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.x.len(), 2, |i, j| {
            let x = self.x[i];
            let e = (-p[0] * x).exp();
            if j == 0 {
                -p[1] * x * e
            } else {
                (-p[0] * x).exp_m1()
            }
        })
    }

    fn project(&self, p: &mut [f64]) {
        p[0] = p[0].abs().max(1e-12);
    }
}

/// Least-squares amplitude for a fixed shape: a = Σyg/Σg².
fn amplitude(x: &[f64], y: &[f64], u: f64) -> (f64, f64) {
    let (num, den) = x.iter().zip(y).fold((0.0, 0.0), |(n, d), (&x, &y)| {
        let g = saturation_model(u, 1.0, x);
        (n + g * y, d + g * g)
    });
    let a = num / den;
    let cost = x
        .iter()
        .zip(y)
        .map(|(&x, &y)| (y - a * saturation_model(u, 1.0, x)).powi(2))
        .sum();
    (a, cost)
}

pub fn fit_cross_section(data: &[FluencePoint]) -> Result<CrossSectionFit> {
    if data.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {}", data.len())));
    }
    if data
        .iter()
        .any(|p| !(p.fluence >= 0.0 && p.fluence.is_finite() && p.counts.is_finite()))
    {
        return Err(Error::Fit("fluence must be finite and non-negative".into()));
    }
    let phi_max = data.iter().map(|p| p.fluence).fold(0.0, f64::max);
    let n_max = data.iter().map(|p| p.counts.abs()).fold(0.0, f64::max);
    if n_max == 0.0 {
        return Err(Error::Fit("all counts are zero".into()));
    }
    if phi_max == 0.0 {
        return Err(Error::Fit("all fluences are zero".into()));
    }
    let problem = Problem {
        x: data.iter().map(|p| p.fluence / phi_max).collect(),
        y: data.iter().map(|p| p.counts / n_max).collect(),
    };
    // coarse log grid in σφ_max, amplitude solved linearly at each node
    let start = (0..=120)
        .map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 120.0))
        .map(|u| {
            let (a, cost) = amplitude(&problem.x, &problem.y, u);
            (u, a, cost)
        })
        .filter(|c| c.2.is_finite())
        .fold((1.0, 1.0, f64::INFINITY), |best, c| if c.2 < best.2 { c } else { best });
    let solution = minimize(&problem, &[start.0, start.1])?;
    let (u, a) = (solution.params[0], solution.params[1]);
    if !(a > 0.0) {
        return Err(Error::Fit(format!("fitted N0 = {:e} is not positive", a * n_max)));
    }
    let dof = data.len() - 2;
    let var_scale = if dof > 0 { solution.chi2 / dof as f64 } else { 0.0 };
    let units = [1.0 / phi_max, n_max];
    let cov = |i: usize, j: usize| solution.inverse_hessian[(i, j)] * var_scale * units[i] * units[j];
    let covariance = [[cov(0, 0), cov(0, 1)], [cov(1, 0), cov(1, 1)]];
    let sigma_pi = u / phi_max;
    let n0 = a * n_max;
    if u < 1.0 {
        log::warn!(
            "largest sigma*fluence is {u:.3}; the saturation plateau is not reached and N0 is poorly constrained"
        );
    }
    let residuals: Vec<f64> = data
        .iter()
        .map(|p| p.counts - saturation_model(sigma_pi, n0, p.fluence))
        .collect();
    let residual_rms = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    Ok(CrossSectionFit {
        sigma_pi,
        sigma_pi_err: covariance[0][0].max(0.0).sqrt(),
        n0,
        n0_err: covariance[1][1].max(0.0).sqrt(),
        covariance,
        residuals,
        residual_rms,
        max_depletion: u,
    })
}
