//! Envelope-sinusoid fit S_N = V₀ exp(−τ²/2σ_w²) cos(2π(τ − τ_off)/σ_p).
//!
//! Internally times are in ns so all parameters are O(1..100).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::lm::{minimize, LeastSquares, Solution};
use crate::error::{Error, Result};
use crate::interferometer::SignalCurve;
use crate::random::{normal_pair, seeded};

const NS: f64 = 1e-9;
const V0_BOUND: f64 = 1.5;
const MIN_POINTS: usize = 8;

/// Parameters of the fringe model, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FringeParams {
    pub v0: f64,
    pub sigma_w: f64,
    pub sigma_p: f64,
    pub tau_off: f64,
}

impl FringeParams {
    pub fn evaluate(&self, tau: f64) -> f64 {
        let envelope = (-tau * tau / (2.0 * self.sigma_w * self.sigma_w)).exp();
        self.v0 * envelope * (2.0 * PI * (tau - self.tau_off) / self.sigma_p).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseMode {
    /// τ_off held at the reference delay.
    Fixed,
    /// τ_off fitted as a free phase.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FringeUncertainties {
    pub v0: f64,
    pub sigma_w: f64,
    pub sigma_p: f64,
    pub tau_off: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FringeFit {
    #[serde(flatten)]
    pub params: FringeParams,
    pub phase_mode: PhaseMode,
    pub uncertainties: FringeUncertainties,
    /// Parameter covariance in SI units, order (V₀, σ_w, σ_p[, τ_off]).
    pub covariance: Vec<Vec<f64>>,
    /// Unweighted RMS of data − model.
    pub residual_rms: f64,
    pub residuals: Vec<f64>,
    pub chi2: f64,
    pub dof: usize,
    /// Covariance scaled by χ²/dof because the data carried no errors.
    pub unit_weights: bool,
    pub iterations: usize,
}

struct Problem {
    tau: Vec<f64>,
    y: Vec<f64>,
    inv_sigma: Vec<f64>,
    /// fixed τ_off in ns, or None when it is a parameter
    tau_off: Option<f64>,
}

impl Problem {
    fn unpack(&self, p: &[f64]) -> (f64, f64, f64, f64) {
        (p[0], p[1], p[2], self.tau_off.unwrap_or_else(|| p[3]))
    }
}

impl LeastSquares for Problem {
    fn n_params(&self) -> usize {
        if self.tau_off.is_some() {
            3
        } else {
            4
        }
    }

    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        let (v0, w, period, t0) = self.unpack(p);
        let model = FringeParams {
            v0,
            sigma_w: w,
            sigma_p: period,
            tau_off: t0,
        };
        DVector::from_iterator(
            self.tau.len(),
            self.tau
                .iter()
                .zip(&self.y)
                .zip(&self.inv_sigma)
                .map(|((&t, &y), &k)| (y - model.evaluate(t)) * k),
        )
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let (v0, w, period, t0) = self.unpack(p);
        let n = self.n_params();
        let mut jac = DMatrix::zeros(self.tau.len(), n);
        for (i, (&t, &k)) in self.tau.iter().zip(&self.inv_sigma).enumerate() {
            let e = (-t * t / (2.0 * w * w)).exp();
            let arg = 2.0 * PI * (t - t0) / period;
            let (s, c) = arg.sin_cos();
            jac[(i, 0)] = -k * e * c;
            jac[(i, 1)] = -k * v0 * c * e * t * t / (w * w * w);
            jac[(i, 2)] = -k * v0 * e * s * 2.0 * PI * (t - t0) / (period * period);
            if n == 4 {
                jac[(i, 3)] = -k * v0 * e * s * 2.0 * PI / period;
            }
        }
        jac
    }

    fn project(&self, p: &mut [f64]) {
        p[0] = p[0].clamp(-V0_BOUND, V0_BOUND);
        p[1] = p[1].abs().max(1e-6);
        p[2] = p[2].abs().max(1e-6);
    }

    fn scale(&self, p: &[f64]) -> Vec<f64> {
        // the phase is measured against the period, V₀ against its bound
        let mut s = vec![p[0].abs().max(1e-3), p[1], p[2]];
        if p.len() == 4 {
            s.push(p[2]);
        }
        s
    }
}

/// Points kept for fitting: the reference record itself (τ = τ_off with
/// S_res = S_off exactly) carries no information and is dropped.
fn fit_data(curve: &SignalCurve, tau_off: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut tau = Vec::new();
    let mut y = Vec::new();
    let mut sigma = Vec::new();
    for r in curve.records() {
        let is_reference = (r.tau - tau_off).abs() <= 1e-6 * NS && r.s_res == r.s_off && r.sigma_sn == 0.0;
        if is_reference {
            continue;
        }
        tau.push(r.tau / NS);
        y.push(r.s_n);
        sigma.push(r.sigma_sn);
    }
    (tau, y, sigma)
}

/// Inverse-σ weights, or unit weights when no point carries an error.
fn weights(sigma: &[f64]) -> Result<(Vec<f64>, bool)> {
    if sigma.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::Fit("sigma_SN must be finite and non-negative".into()));
    }
    if sigma.iter().all(|&s| s == 0.0) {
        return Ok((vec![1.0; sigma.len()], true));
    }
    if sigma.contains(&0.0) {
        return Err(Error::Fit(
            "degenerate weights: some points have sigma_SN = 0 while others do not".into(),
        ));
    }
    Ok((sigma.iter().map(|s| 1.0 / s).collect(), false))
}

/// Dominant frequency of the mean-subtracted data and the phase of that
/// component, scanning frequencies between one and n/2 cycles per span.
fn dominant_component(tau: &[f64], y: &[f64]) -> (f64, f64) {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let width = span(tau);
    let f_min = 1.0 / width;
    let f_max = tau.len() as f64 / (2.0 * width);
    let steps = 4000;
    let (f, _, phase) = (0..=steps)
        .map(|i| {
            let f = f_min + (f_max - f_min) * i as f64 / steps as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for (&t, &v) in tau.iter().zip(y) {
                let (s, c) = (2.0 * PI * f * t).sin_cos();
                re += (v - mean) * c;
                im -= (v - mean) * s;
            }
            (f, re * re + im * im, im.atan2(re))
        })
        .fold(
            (f_min, -1.0, 0.0),
            |best, cand| if cand.1 > best.1 { cand } else { best },
        );
    (f, phase)
}

/// Push-button starting point in ns: σ_p and phase from the dominant
/// Fourier component, σ_w from the second moment of |S_N|, V₀ by linear
/// least squares given the rest.
fn initial_guess(tau: &[f64], y: &[f64], tau_off: Option<f64>) -> [f64; 4] {
    let (f, phase) = dominant_component(tau, y);
    let period = 1.0 / f;
    // S ≈ V cos(2πf(τ − τ₀)) has DFT phase −2πfτ₀
    let t0 = tau_off.unwrap_or(-phase / (2.0 * PI * f));
    let weight: f64 = y.iter().map(|v| v.abs()).sum();
    let width = if weight > 0.0 {
        (tau.iter().zip(y).map(|(t, v)| t * t * v.abs()).sum::<f64>() / weight).sqrt()
    } else {
        period
    }
    .max(1e-3);
    let basis = FringeParams {
        v0: 1.0,
        sigma_w: width,
        sigma_p: period,
        tau_off: t0,
    };
    let (num, den) = tau.iter().zip(y).fold((0.0, 0.0), |(n, d), (&t, &v)| {
        let g = basis.evaluate(t);
        (n + g * v, d + g * g)
    });
    let v0 = if den > 0.0 {
        (num / den).clamp(-V0_BOUND, V0_BOUND)
    } else {
        0.0
    };
    [v0, width, period, t0]
}

fn span(tau: &[f64]) -> f64 {
    tau.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - tau.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn solve(curve: &SignalCurve, tau_off: f64, mode: PhaseMode, initial: Option<&FringeParams>) -> Result<FringeFit> {
    let (tau, y, sigma) = fit_data(curve, tau_off);
    if tau.len() < MIN_POINTS {
        return Err(Error::Fit(format!(
            "need at least {MIN_POINTS} data points, got {}",
            tau.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("S_N contains non-finite values".into()));
    }
    let (inv_sigma, unit_weights) = weights(&sigma)?;
    let fixed = match mode {
        PhaseMode::Fixed => Some(tau_off / NS),
        PhaseMode::Free => None,
    };
    let problem = Problem {
        tau,
        y,
        inv_sigma,
        tau_off: fixed,
    };
    let n = problem.n_params();
    // a supplied start competes with the automatic one; lower χ² wins
    let mut starts = vec![initial_guess(&problem.tau, &problem.y, fixed)];
    if let Some(p) = initial {
        starts.insert(
            0,
            [p.v0, p.sigma_w / NS, p.sigma_p / NS, fixed.unwrap_or(p.tau_off / NS)],
        );
    }
    let mut best: Option<Result<Solution>> = None;
    for start in &starts {
        let candidate = minimize(&problem, &start[..n]);
        best = match (best, candidate) {
            (Some(Ok(b)), Ok(c)) => Some(Ok(if c.chi2 < b.chi2 { c } else { b })),
            (Some(Ok(b)), Err(_)) => Some(Ok(b)),
            (_, c) => Some(c),
        };
    }
    let solution = best.expect("at least one start")?;
    let (mut v0, w, period, mut t0) = problem.unpack(&solution.params);
    if span(&problem.tau) < period {
        return Err(Error::Fit(format!(
            "data span {:.3} ns is shorter than the fitted period {period:.3} ns",
            span(&problem.tau)
        )));
    }
    let dof = problem.tau.len() - n;
    let mut covariance = solution.inverse_hessian.clone();
    if unit_weights {
        covariance *= if dof > 0 { solution.chi2 / dof as f64 } else { 0.0 };
    }
    if mode == PhaseMode::Free {
        if v0 < 0.0 {
            v0 = -v0;
            t0 += period / 2.0;
            covariance.row_mut(0).neg_mut();
            covariance.column_mut(0).neg_mut();
        }
        t0 -= period * (t0 / period).round();
    }
    let units = [1.0, NS, NS, NS];
    let covariance: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| covariance[(i, j)] * units[i] * units[j]).collect())
        .collect();
    let err = |i: usize| covariance[i][i].max(0.0).sqrt();
    let params = FringeParams {
        v0,
        sigma_w: w * NS,
        sigma_p: period * NS,
        tau_off: t0 * NS,
    };
    let residuals: Vec<f64> = problem
        .tau
        .iter()
        .zip(&problem.y)
        .map(|(&t, &v)| v - params.evaluate(t * NS))
        .collect();
    let residual_rms = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    Ok(FringeFit {
        params,
        phase_mode: mode,
        uncertainties: FringeUncertainties {
            v0: err(0),
            sigma_w: err(1),
            sigma_p: err(2),
            tau_off: (n == 4).then(|| err(3)),
        },
        covariance,
        residual_rms,
        residuals,
        chi2: solution.chi2,
        dof,
        unit_weights,
        iterations: solution.iterations,
    })
}

/// Fit with τ_off held fixed.
pub fn fit_fringe_model(curve: &SignalCurve, tau_off: f64, initial: Option<&FringeParams>) -> Result<FringeFit> {
    solve(curve, tau_off, PhaseMode::Fixed, initial)
}

/// Fit with τ_off as a free phase; V₀ is reported positive.
pub fn fit_fringe_model_free(curve: &SignalCurve, tau_off: f64, initial: Option<&FringeParams>) -> Result<FringeFit> {
    solve(curve, tau_off, PhaseMode::Free, initial)
}

pub fn fit_fringe(
    curve: &SignalCurve,
    tau_off: f64,
    mode: PhaseMode,
    initial: Option<&FringeParams>,
) -> Result<FringeFit> {
    solve(curve, tau_off, mode, initial)
}

/// Noiseless samples of the fringe model as a curve with S_off = 1.
pub fn synthetic_curve(params: &FringeParams, taus: &[f64], sigma: f64) -> Result<SignalCurve> {
    SignalCurve::new(
        taus.iter()
            .map(|&tau| {
                let s_n = params.evaluate(tau);
                crate::interferometer::SignalRecord {
                    tau,
                    s_res: 1.0 + s_n,
                    s_off: 1.0,
                    s_n,
                    sigma_sn: sigma,
                }
            })
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseTrials {
    pub trials: usize,
    pub converged: usize,
    /// trials whose fitted V₀ lies within `n_sigma` standard errors of truth
    pub covered: usize,
    pub n_sigma: f64,
}

impl NoiseTrials {
    pub fn coverage(&self) -> f64 {
        self.covered as f64 / self.trials as f64
    }
}

/// Fits of `clean` with additive Gaussian noise of standard deviation
/// `noise`; trial i draws from stream i of `seed`.
pub fn noisy_fringe_fits(
    clean: &SignalCurve,
    tau_off: f64,
    mode: PhaseMode,
    noise: f64,
    trials: usize,
    seed: u64,
) -> Vec<Result<FringeFit>> {
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeded(seed, i as u64);
            let records = clean
                .records()
                .iter()
                .map(|r| {
                    let s_n = r.s_n + noise * normal_pair(&mut rng).0;
                    crate::interferometer::SignalRecord {
                        s_n,
                        s_res: r.s_off * (1.0 + s_n),
                        sigma_sn: noise,
                        ..*r
                    }
                })
                .collect();
            solve(&SignalCurve::new(records)?, tau_off, mode, None)
        })
        .collect()
}

/// V₀ coverage of [`noisy_fringe_fits`] against known parameters.
pub fn fringe_noise_trials(
    clean: &SignalCurve,
    truth: &FringeParams,
    mode: PhaseMode,
    noise: f64,
    trials: usize,
    seed: u64,
    n_sigma: f64,
) -> NoiseTrials {
    let fits = noisy_fringe_fits(clean, truth.tau_off, mode, noise, trials, seed);
    NoiseTrials {
        trials,
        converged: fits.iter().filter(|f| f.is_ok()).count(),
        covered: fits
            .iter()
            .flatten()
            .filter(|f| (f.params.v0 - truth.v0).abs() <= n_sigma * f.uncertainties.v0)
            .count(),
        n_sigma,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::lm::numeric_jacobian;

    fn reference() -> FringeParams {
        FringeParams {
            v0: 0.2,
            sigma_w: 76.5e-9,
            sigma_p: 77.3e-9,
            tau_off: 200e-9,
        }
    }

    fn grid(n: usize, half: f64) -> Vec<f64> {
        (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn recovers_noiseless_parameters() {
        let truth = reference();
        let curve = synthetic_curve(&truth, &grid(41, 200e-9), 0.0).unwrap();
        let fit = fit_fringe_model(&curve, truth.tau_off, None).unwrap();
        assert!(rel(fit.params.v0, 0.2) < 1e-6, "{fit:?}");
        assert!(rel(fit.params.sigma_w, 76.5e-9) < 1e-6);
        assert!(rel(fit.params.sigma_p, 77.3e-9) < 1e-6);
        assert!(fit.residual_rms < 1e-9);
        assert_eq!(fit.covariance.len(), 3);
    }

    #[test]
    fn free_phase_recovers_offset() {
        let truth = FringeParams {
            tau_off: 23e-9,
            ..reference()
        };
        let curve = synthetic_curve(&truth, &grid(41, 200e-9), 0.0).unwrap();
        let fit = fit_fringe_model_free(&curve, 200e-9, None).unwrap();
        assert!(rel(fit.params.v0, 0.2) < 1e-6, "{fit:?}");
        assert!((fit.params.tau_off - 23e-9).abs() < 1e-15);
        assert!(fit.uncertainties.tau_off.is_some());
    }

    #[test]
    fn sign_flip_is_canonicalized() {
        let truth = FringeParams {
            v0: -0.2,
            tau_off: 10e-9,
            ..reference()
        };
        let curve = synthetic_curve(&truth, &grid(41, 200e-9), 0.0).unwrap();
        let fit = fit_fringe_model_free(&curve, 0.0, None).unwrap();
        assert!(rel(fit.params.v0, 0.2) < 1e-6);
        let expected = 10e-9 + 77.3e-9 / 2.0 - 77.3e-9;
        assert!((fit.params.tau_off - expected).abs() < 1e-14, "{}", fit.params.tau_off);
        // fixed phase keeps the sign
        let fixed = fit_fringe_model(&curve, 10e-9, None).unwrap();
        assert!(rel(fixed.params.v0, -0.2) < 1e-6);
    }

    #[test]
    fn zero_visibility_is_consistent_with_zero() {
        let truth = reference();
        let taus = grid(21, 200e-9);
        let mut rng = seeded(5, 0);
        let records = taus
            .iter()
            .map(|&tau| {
                let s_n = 0.01 * normal_pair(&mut rng).0;
                crate::interferometer::SignalRecord {
                    tau,
                    s_res: 1.0 + s_n,
                    s_off: 1.0,
                    s_n,
                    sigma_sn: 0.01,
                }
            })
            .collect();
        let curve = SignalCurve::new(records).unwrap();
        let fit = fit_fringe_model(&curve, truth.tau_off, Some(&truth)).unwrap();
        assert!(fit.params.v0.abs() < 3.0 * fit.uncertainties.v0, "{fit:?}");
    }

    #[test]
    fn too_few_points_or_short_span() {
        let truth = reference();
        let curve = synthetic_curve(&truth, &grid(7, 200e-9), 0.0).unwrap();
        assert!(matches!(fit_fringe_model(&curve, 200e-9, None), Err(Error::Fit(_))));
        let short = synthetic_curve(&truth, &grid(12, 20e-9), 0.0).unwrap();
        assert!(matches!(
            fit_fringe_model(&short, 200e-9, Some(&truth)),
            Err(Error::Fit(_))
        ));
    }

    #[test]
    fn mixed_zero_errors_are_degenerate() {
        let taus = grid(12, 200e-9);
        let records = taus
            .iter()
            .enumerate()
            .map(|(i, &tau)| crate::interferometer::SignalRecord {
                tau,
                s_res: 1.0,
                s_off: 1.0,
                s_n: 0.0,
                sigma_sn: if i == 3 { 0.0 } else { 0.01 },
            })
            .collect();
        let curve = SignalCurve::new(records).unwrap();
        let err = fit_fringe_model(&curve, 1.0, Some(&reference())).unwrap_err();
        assert!(err.to_string().contains("degenerate"));
    }

    #[test]
    fn reference_point_is_dropped() {
        let truth = reference();
        let mut records: Vec<_> = synthetic_curve(&truth, &grid(21, 180e-9), 0.0)
            .unwrap()
            .records()
            .to_vec();
        records.push(crate::interferometer::SignalRecord {
            tau: 200e-9,
            s_res: 0.9,
            s_off: 0.9,
            s_n: 0.0,
            sigma_sn: 0.0,
        });
        let fit = fit_fringe_model(&SignalCurve::new(records).unwrap(), 200e-9, None).unwrap();
        assert_eq!(fit.residuals.len(), 21);
        assert!(rel(fit.params.v0, 0.2) < 1e-6);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let tau = grid(15, 150.0);
        let problem = Problem {
            y: tau.iter().map(|t| 0.1 * (t / 50.0).sin()).collect(),
            inv_sigma: vec![2.0; 15],
            tau,
            tau_off: None,
        };
        let p = [0.3, 70.0, 80.0, 12.0];
        let diff = problem.jacobian(&p) - numeric_jacobian(&problem, &p);
        assert!(diff.amax() < 1e-6, "{diff}");
    }

    #[test]
    fn noise_coverage() {
        let truth = reference();
        let clean = synthetic_curve(&truth, &grid(21, 200e-9), 0.0).unwrap();
        let r = fringe_noise_trials(&clean, &truth, PhaseMode::Fixed, 0.05 * 0.2, 200, 42, 3.0);
        assert!(r.coverage() >= 0.95, "{r:?}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn perturbed_starts_converge(
                v0 in 0.05f64..0.5,
                w in 20.0f64..500.0,
                p in 20.0f64..500.0,
                k in prop::array::uniform3(-0.3f64..0.3),
            ) {
                let truth = FringeParams { v0, sigma_w: w * NS, sigma_p: p * NS, tau_off: 0.3 * p * NS };
                // cover at least one period and two envelope widths
                let half = (2.0 * w).max(p);
                // at least five samples per period
                let n = (2.0 * half / (p / 5.0)).ceil() as usize + 1;
                let curve = synthetic_curve(&truth, &grid(n.max(41), half * NS), 0.0).unwrap();
                let start = FringeParams {
                    v0: v0 * (1.0 + k[0]),
                    sigma_w: truth.sigma_w * (1.0 + k[1]),
                    sigma_p: truth.sigma_p * (1.0 + k[2]),
                    tau_off: truth.tau_off,
                };
                let fit = fit_fringe_model(&curve, truth.tau_off, Some(&start)).unwrap();
                prop_assert!(rel(fit.params.v0, v0) < 1e-6, "{:?}", fit.params);
                prop_assert!(rel(fit.params.sigma_w, truth.sigma_w) < 1e-6);
                prop_assert!(rel(fit.params.sigma_p, truth.sigma_p) < 1e-6);
            }
        }
    }
}
