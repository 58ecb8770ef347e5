//! Three-grating time-domain signal: near-resonant Talbot-coefficient series,
//! fringe shift, normalized contrast and τ scans.
//!
//! For one beam speed the detected signal is
//!
//! ```text
//! S(Δx) = Σ_l S_l e^{2πilΔx/d}
//! S_l   = D̃(lτd/T_T) B⁽¹⁾₋ₗ(lτ/T_T) B⁽²⁾₂ₗ(l(T+τ)/T_T) B⁽³⁾₋ₗ(0)
//! ```
//!
//! with the speed spread handled by averaging the complex fringe components.

use std::f64::consts::{LN_10, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::constants::PLANCK;
use crate::error::{Error, Result};
use crate::grating::{talbot_coefficient, CoefficientModel, GratingStrength};
use crate::numeric::normal_quadrature;
use crate::scenario::{BeamKinematics, Model, Scenario};

const TRUNCATION_TOLERANCE: f64 = 1e-12;
const MAX_ORDER: usize = 64;
const SPEED_NODES: usize = 11;

/// Effective fringe displacement
/// Δx = Δx₁ − 2Δx₂ + Δx₃ − v tanγ τ − gT² − 2gτT − gτ²/2.
pub fn fringe_shift(shifts: [f64; 3], pulse_separation: f64, tau: f64, beam: &BeamKinematics) -> f64 {
    let t = pulse_separation;
    let g = beam.gravity;
    shifts[0] - 2.0 * shifts[1] + shifts[2]
        - beam.tilt_velocity() * tau
        - g * t * t
        - 2.0 * g * tau * t
        - 0.5 * g * tau * tau
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeShape {
    Gaussian,
}

/// Fourier transform D̃ of the transverse momentum distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentumEnvelope {
    pub divergence: f64,
    pub speed: f64,
    pub mass: f64,
    pub shape: EnvelopeShape,
}

impl MomentumEnvelope {
    pub fn new(divergence: f64, speed: f64, mass: f64) -> Self {
        MomentumEnvelope {
            divergence,
            speed,
            mass,
            shape: EnvelopeShape::Gaussian,
        }
    }

    pub fn from_beam(beam: &BeamKinematics, mass: f64) -> Self {
        Self::new(beam.divergence, beam.speed, mass)
    }

    /// Gaussian width s of D̃(x) = exp(-x²/2s²), s = h/(2√(2 ln 10) m v sin α).
    /// Infinite for a perfectly collimated beam.
    pub fn width(&self) -> f64 {
        let sin_a = self.divergence.sin();
        if sin_a == 0.0 {
            return f64::INFINITY;
        }
        PLANCK / (2.0 * (2.0 * LN_10).sqrt() * self.mass * self.speed * sin_a)
    }

    /// Transverse momentum spread σ_p = h/(2π s) of the matching Gaussian D(p).
    pub fn momentum_spread(&self) -> f64 {
        let s = self.width();
        if s.is_infinite() {
            0.0
        } else {
            PLANCK / (2.0 * PI * s)
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        let s = self.width();
        if s.is_infinite() {
            return 1.0;
        }
        (-x * x / (2.0 * s * s)).exp()
    }

    /// Resonance-dip width σ_w = s T_T / d in τ, the Gaussian width of the
    /// S_N envelope exp(-τ²/2σ_w²).
    pub fn dip_width(&self, talbot_time: f64, period: f64) -> f64 {
        self.width() * talbot_time / period
    }
}

pub fn momentum_envelope_value(env: &MomentumEnvelope, x: f64) -> f64 {
    env.value(x)
}

/// Real signal coefficients S_l for l ≥ 0 at a single speed (S₋ₗ = Sₗ).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalCoefficients {
    pub terms: Vec<f64>,
    pub truncation_order: usize,
    pub truncation_residual: f64,
}

impl SignalCoefficients {
    pub fn term(&self, l: i32) -> f64 {
        self.terms.get(l.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }
}

/// Speed-averaged complex fringe components c_l (l ≥ 0, c₋ₗ = c̄ₗ) with all
/// dynamic phases folded in; only the static grating shift is left out.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeSeries {
    pub components: Vec<Complex64>,
    pub period: f64,
    pub truncation_residual: f64,
}

impl FringeSeries {
    /// Σ_l c_l e^{2πil δ/d} over l ∈ [−L, L] for an extra static shift δ.
    pub fn evaluate_complex(&self, static_shift: f64) -> Complex64 {
        let mut sum = self.components[0];
        for (l, c) in self.components.iter().enumerate().skip(1) {
            let phase = Complex64::from_polar(1.0, 2.0 * PI * l as f64 * static_shift / self.period);
            sum += c * phase + (c * phase).conj();
        }
        sum
    }

    pub fn evaluate(&self, static_shift: f64) -> f64 {
        let mut sum = self.components[0].re;
        for (l, c) in self.components.iter().enumerate().skip(1) {
            let phase = Complex64::from_polar(1.0, 2.0 * PI * l as f64 * static_shift / self.period);
            sum += 2.0 * (c * phase).re;
        }
        sum
    }

    pub fn mean(&self) -> f64 {
        self.components[0].re
    }

    /// 2|c₁|/c₀.
    pub fn sinusoidal_visibility(&self) -> f64 {
        match self.components.get(1) {
            Some(c1) => 2.0 * c1.norm() / self.components[0].re,
            None => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct SpeedNode {
    weight: f64,
    tilt_velocity: f64,
    envelope: MomentumEnvelope,
}

/// Precomputed evaluation context for one scenario.
#[derive(Debug, Clone)]
pub struct SignalModel {
    strengths: [GratingStrength; 3],
    model: CoefficientModel,
    g1_absorptive: bool,
    talbot_time: f64,
    period: f64,
    pulse_separation: f64,
    gravity: f64,
    static_shift: f64,
    tau_off: f64,
    nodes: Vec<SpeedNode>,
}

impl SignalModel {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        Self::with_model(scenario, scenario.model)
    }

    pub fn with_model(scenario: &Scenario, model: Model) -> Result<Self> {
        scenario.validate()?;
        let beam = &scenario.beam;
        let mass = scenario.molecule.mass;
        let spread = beam.relative_speed_spread;
        let quadrature = if spread > 0.0 {
            normal_quadrature(SPEED_NODES)
        } else {
            vec![(0.0, 1.0)]
        };
        let nodes = quadrature
            .into_iter()
            .map(|(x, weight)| {
                let speed = beam.speed * (1.0 + spread * x);
                SpeedNode {
                    weight,
                    tilt_velocity: speed * beam.tilt.tan(),
                    envelope: MomentumEnvelope::new(beam.divergence, speed, mass),
                }
            })
            .collect();
        let g = &scenario.gratings;
        Ok(SignalModel {
            strengths: scenario.strengths()?,
            model: model.into(),
            g1_absorptive: scenario.g1_absorptive,
            talbot_time: scenario.talbot_time(),
            period: scenario.period(),
            pulse_separation: scenario.timing.pulse_separation,
            gravity: beam.gravity,
            static_shift: g[0].shift - 2.0 * g[1].shift + g[2].shift,
            tau_off: scenario.timing.tau_off,
            nodes,
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn talbot_time(&self) -> f64 {
        self.talbot_time
    }

    /// Product of the three grating coefficients for order l (no envelope).
    fn grating_product(&self, l: i32, tau: f64) -> f64 {
        let tt = self.talbot_time;
        let chi1 = if self.g1_absorptive { 0.0 } else { l as f64 * tau / tt };
        let b1 = talbot_coefficient(-l, chi1, &self.strengths[0], self.model);
        let b2 = talbot_coefficient(
            2 * l,
            l as f64 * (self.pulse_separation + tau) / tt,
            &self.strengths[1],
            self.model,
        );
        let b3 = talbot_coefficient(-l, 0.0, &self.strengths[2], CoefficientModel::Absorptive);
        b1 * b2 * b3
    }

    /// Upper bound on |S_l| used for truncation: |B⁽¹⁾|, |B⁽²⁾| ≤ 1.
    fn term_bound(&self, l: i32, envelope: f64) -> f64 {
        talbot_coefficient(-l, 0.0, &self.strengths[2], CoefficientModel::Absorptive).abs() * envelope
    }

    fn envelope_at(&self, node: &SpeedNode, l: i32, tau: f64) -> f64 {
        node.envelope.value(l as f64 * tau * self.period / self.talbot_time)
    }

    /// S_l at the nominal speed.
    pub fn coefficients(&self, tau: f64) -> Result<SignalCoefficients> {
        let node = self.nodes[self.nodes.len() / 2];
        let s0 = self.grating_product(0, tau);
        check_s0(s0)?;
        let mut terms = vec![s0];
        let mut residual = 0.0;
        for l in 1..=MAX_ORDER as i32 {
            let env = self.envelope_at(&node, l, tau);
            let bound = self.term_bound(l, env);
            if bound < TRUNCATION_TOLERANCE * s0.abs() {
                residual = bound;
                break;
            }
            terms.push(env * self.grating_product(l, tau));
            residual = bound;
        }
        Ok(SignalCoefficients {
            truncation_order: terms.len() - 1,
            terms,
            truncation_residual: residual,
        })
    }

    /// Speed-averaged complex fringe components at delay τ.
    pub fn series(&self, tau: f64) -> Result<FringeSeries> {
        if tau.abs() > self.talbot_time / 100.0 {
            log::warn!(
                "tau = {:.3e} s exceeds T_T/100; the near-resonant series may be inaccurate",
                tau
            );
        }
        let s0 = self.grating_product(0, tau);
        check_s0(s0)?;
        let mut components = vec![Complex64::new(s0, 0.0)];
        let mut residual = 0.0;
        for l in 1..=MAX_ORDER as i32 {
            let product = self.grating_product(l, tau);
            let mut c = Complex64::new(0.0, 0.0);
            let mut bound: f64 = 0.0;
            for node in &self.nodes {
                let env = self.envelope_at(node, l, tau);
                bound = bound.max(self.term_bound(l, env));
                let shift = -node.tilt_velocity * tau - self.gravity_shift(tau);
                let phase = 2.0 * PI * l as f64 * shift / self.period;
                c += Complex64::from_polar(node.weight * env * product, phase);
            }
            residual = bound;
            if bound < TRUNCATION_TOLERANCE * s0.abs() {
                break;
            }
            components.push(c);
        }
        Ok(FringeSeries {
            components,
            period: self.period,
            truncation_residual: residual,
        })
    }

    fn gravity_shift(&self, tau: f64) -> f64 {
        let t = self.pulse_separation;
        let g = self.gravity;
        g * t * t + 2.0 * g * tau * t + 0.5 * g * tau * tau
    }

    pub fn signal(&self, tau: f64) -> Result<f64> {
        Ok(self.series(tau)?.evaluate(self.static_shift))
    }

    pub fn normalized_signal(&self, tau: f64) -> Result<f64> {
        let s_res = self.signal(tau)?;
        let s_off = self.signal(self.tau_off)?;
        Ok((s_res - s_off) / s_off)
    }

    /// |S₁(τ_off)/S₀|: how much fringe survives in the reference mode.
    pub fn reference_residual(&self) -> Result<f64> {
        let series = self.series(self.tau_off)?;
        Ok(series.components.get(1).map_or(0.0, |c| c.norm() / series.mean()))
    }

    pub fn scan(&self, taus: &[f64]) -> Result<SignalCurve> {
        if taus.is_empty() {
            return Err(Error::EmptyGrid("no tau values".into()));
        }
        let s_off = self.signal(self.tau_off)?;
        let s_res: Vec<f64> = taus.par_iter().map(|&t| self.signal(t)).collect::<Result<_>>()?;
        let records = taus
            .iter()
            .zip(s_res)
            .map(|(&tau, s_res)| SignalRecord {
                tau,
                s_res,
                s_off,
                s_n: (s_res - s_off) / s_off,
                sigma_sn: 0.0,
            })
            .collect();
        SignalCurve::new(records)
    }
}

fn check_s0(s0: f64) -> Result<()> {
    if !(s0 > 0.0 && s0.is_finite()) {
        return Err(Error::Degenerate(format!(
            "mean transmitted signal S0 = {s0:e}; the gratings are opaque"
        )));
    }
    Ok(())
}

pub fn signal_coefficients(scenario: &Scenario, tau: f64) -> Result<SignalCoefficients> {
    SignalModel::new(scenario)?.coefficients(tau)
}

pub fn signal(scenario: &Scenario, tau: f64) -> Result<f64> {
    SignalModel::new(scenario)?.signal(tau)
}

pub fn normalized_signal(scenario: &Scenario, tau: f64) -> Result<f64> {
    SignalModel::new(scenario)?.normalized_signal(tau)
}

pub fn resonance_scan(scenario: &Scenario) -> Result<SignalCurve> {
    let taus = scenario.timing.tau_grid();
    SignalModel::new(scenario)?.scan(&taus)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalRecord {
    pub tau: f64,
    pub s_res: f64,
    pub s_off: f64,
    pub s_n: f64,
    pub sigma_sn: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalCurve {
    records: Vec<SignalRecord>,
}

impl SignalCurve {
    pub fn new(records: Vec<SignalRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyGrid("signal curve has no records".into()));
        }
        for (i, r) in records.iter().enumerate() {
            if !(r.s_off > 0.0) {
                return Err(Error::GridMismatch(format!("record {i}: S_off must be positive")));
            }
            if !(r.sigma_sn >= 0.0) {
                return Err(Error::GridMismatch(format!(
                    "record {i}: sigma_SN must be non-negative"
                )));
            }
        }
        if let Some(i) = records.windows(2).position(|w| w[1].tau <= w[0].tau) {
            return Err(Error::GridMismatch(format!(
                "tau must be strictly increasing (records {i} and {})",
                i + 1
            )));
        }
        Ok(SignalCurve { records })
    }

    pub fn records(&self) -> &[SignalRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn taus(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.tau).collect()
    }

    pub fn normalized(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.s_n).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Visibility {
    /// 2|S₁|/S₀
    pub sinusoidal: f64,
    /// (S_max − S_min)/(S_max + S_min) over a dense Δx scan
    pub max_min: f64,
}

/// Fringe visibility at τ = 0.
pub fn visibility(scenario: &Scenario) -> Result<Visibility> {
    let series = SignalModel::new(scenario)?.series(0.0)?;
    let profile: Vec<f64> = (0..512)
        .map(|i| series.evaluate(i as f64 * series.period / 512.0))
        .collect();
    let max = profile.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = profile.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Visibility {
        sinusoidal: series.sinusoidal_visibility(),
        max_min: (max - min) / (max + min),
    })
}

/// Signal over one grating period of static shift at delay τ, `points` samples.
pub fn fringe_profile(scenario: &Scenario, tau: f64, points: usize) -> Result<Vec<(f64, f64)>> {
    let series = SignalModel::new(scenario)?.series(tau)?;
    let d = series.period;
    Ok((0..points)
        .map(|i| {
            let dx = i as f64 * d / points as f64;
            (dx, series.evaluate(dx))
        })
        .collect())
}

/// S_N(T) = V₀(T) sin(2π(b − gT²)/d) with V₀(T) the model's sinusoidal
/// visibility at pulse separation T.
pub fn gravity_visibility_curve(scenario: &Scenario, offset: f64, separations: &[f64]) -> Result<Vec<(f64, f64)>> {
    let d = scenario.period();
    let g = scenario.beam.gravity;
    separations
        .par_iter()
        .map(|&t| {
            let mut s = scenario.clone();
            s.timing.pulse_separation = t;
            let v0 = visibility(&s)?.sinusoidal;
            Ok((t, v0 * (2.0 * PI / d * (offset - g * t * t)).sin()))
        })
        .collect()
}
