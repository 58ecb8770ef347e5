//! Damped Gauss–Newton (Levenberg–Marquardt) for small dense problems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) const MAX_ITERATIONS: usize = 200;
pub(crate) const PARAMETER_TOLERANCE: f64 = 1e-9;

/// Weighted residuals r_i = (y_i − f_i(θ))/σ_i and their Jacobian ∂r/∂θ.
pub(crate) trait LeastSquares {
    fn n_params(&self) -> usize;
    fn residuals(&self, params: &[f64]) -> DVector<f64>;
    fn jacobian(&self, params: &[f64]) -> DMatrix<f64>;

    /// Pull parameters back into their admissible box after a step.
    fn project(&self, _params: &mut [f64]) {}

    /// Typical magnitude of each parameter, used by the convergence test.
    fn scale(&self, params: &[f64]) -> Vec<f64> {
        params.iter().map(|p| p.abs().max(1e-12)).collect()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub params: Vec<f64>,
    /// (JᵀJ)⁻¹ at the optimum
    pub inverse_hessian: DMatrix<f64>,
    pub chi2: f64,
    pub iterations: usize,
}

/// Central finite-difference Jacobian, the cross-check for analytic ones.
#[cfg(test)]
pub(crate) fn numeric_jacobian<P: LeastSquares + ?Sized>(problem: &P, params: &[f64]) -> DMatrix<f64> {
    let r0 = problem.residuals(params);
    let mut jac = DMatrix::zeros(r0.len(), params.len());
    for j in 0..params.len() {
        let h = 1e-6 * params[j].abs().max(1e-6);
        let mut plus = params.to_vec();
        let mut minus = params.to_vec();
        plus[j] += h;
        minus[j] -= h;
        let column = (problem.residuals(&plus) - problem.residuals(&minus)) / (2.0 * h);
        jac.set_column(j, &column);
    }
    jac
}

pub(crate) fn minimize<P: LeastSquares + ?Sized>(problem: &P, initial: &[f64]) -> Result<Solution> {
    let n = problem.n_params();
    let mut params = initial.to_vec();
    problem.project(&mut params);
    let mut r = problem.residuals(&params);
    let mut cost = r.norm_squared();
    if !cost.is_finite() {
        return Err(Error::Fit("residuals are not finite at the initial guess".into()));
    }
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let jac = problem.jacobian(&params);
        let jtj = jac.transpose() * &jac;
        let gradient = jac.transpose() * &r;
        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = jtj.clone();
            for i in 0..n {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(step) = damped.cholesky().map(|c| c.solve(&(-&gradient))) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
            problem.project(&mut trial);
            let r_trial = problem.residuals(&trial);
            let trial_cost = r_trial.norm_squared();
            if trial_cost.is_finite() && trial_cost <= cost {
                let scale = problem.scale(&params);
                let change = trial
                    .iter()
                    .zip(&params)
                    .zip(&scale)
                    .map(|((a, b), s)| (a - b).abs() / s)
                    .fold(0.0, f64::max);
                params = trial;
                r = r_trial;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if change < PARAMETER_TOLERANCE {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        // no downhill step at any damping: at the numerical minimum
        if !accepted || converged || cost == 0.0 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Fit(format!(
            "no convergence after {MAX_ITERATIONS} iterations (chi2 = {cost:.6e}, params = {params:?})"
        )));
    }
    let jac = problem.jacobian(&params);
    let inverse_hessian = (jac.transpose() * &jac)
        .try_inverse()
        .ok_or_else(|| Error::Fit("singular normal matrix at the optimum; parameters not identifiable".into()))?;
    Ok(Solution {
        params,
        inverse_hessian,
        chi2: cost,
        iterations,
    })
}
