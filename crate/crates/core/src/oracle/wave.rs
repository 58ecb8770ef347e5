//! Grid wave-propagation oracle.
//!
//! Each initial transverse momentum p is followed in the frame that moves
//! with velocity p/m and falls with g. There the initial plane wave is the
//! constant 1, free evolution is exact in Fourier space, and tilt, gravity
//! and the grating shifts all become position offsets of G(2) and G(3):
//!
//! ```text
//! δ₂(p) = Δx₂ − pT/m − gT²/2
//! δ₃(p) = Δx₃ − p(2T+τ)/m − g(2T+τ)²/2
//! ```
//!
//! The state stays d-periodic, so one period on `points_per_period` nodes
//! is exact. The detected fraction F(δ₂, δ₃) is sampled on a grid of G(2)
//! offsets and expanded in a double Fourier series; the incoherent average
//! over a Gaussian momentum distribution is then applied to every term
//! through its characteristic function.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::GridSpec;
use crate::error::{Error, Result};
use crate::grating::{coherent_transmission, GratingStrength};
use crate::interferometer::{MomentumEnvelope, SignalCurve, SignalRecord};
use crate::numeric::{normal_quadrature, NeumaierSum};
use crate::scenario::Scenario;

/// Largest relative change of the signal tolerated when the grid is doubled.
pub const RESOLUTION_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone, Copy)]
struct MomentumComponent {
    weight: f64,
    mean: f64,
    spread: f64,
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Plans {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }
}

/// Quantum wave oracle bound to one scenario.
pub struct WaveOracle {
    strengths: [GratingStrength; 3],
    shifts: [f64; 3],
    period: f64,
    mass: f64,
    talbot_time: f64,
    pulse_separation: f64,
    gravity: f64,
    tau_off: f64,
    components: Vec<MomentumComponent>,
}

impl WaveOracle {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let beam = &scenario.beam;
        let mass = scenario.molecule.mass;
        let quadrature = if beam.relative_speed_spread > 0.0 {
            normal_quadrature(11)
        } else {
            vec![(0.0, 1.0)]
        };
        let components = quadrature
            .into_iter()
            .map(|(x, weight)| {
                let v = beam.speed * (1.0 + beam.relative_speed_spread * x);
                MomentumComponent {
                    weight,
                    mean: mass * v * beam.tilt.tan(),
                    spread: MomentumEnvelope::new(beam.divergence, v, mass).momentum_spread(),
                }
            })
            .collect();
        Ok(WaveOracle {
            strengths: scenario.strengths()?,
            shifts: scenario.gratings.each_ref().map(|g| g.shift),
            period: scenario.period(),
            mass,
            talbot_time: scenario.talbot_time(),
            pulse_separation: scenario.timing.pulse_separation,
            gravity: beam.gravity,
            tau_off: scenario.timing.tau_off,
            components,
        })
    }

    /// Detected fraction at delay τ, checked against a doubled grid.
    pub fn signal(&self, tau: f64, grid: &GridSpec) -> Result<f64> {
        grid.validate()?;
        let coarse = self.signal_unchecked(tau, grid);
        let fine = self.signal_unchecked(tau, &grid.doubled());
        let change = (coarse - fine).abs() / fine.abs().max(f64::MIN_POSITIVE);
        if change > RESOLUTION_LIMIT {
            return Err(Error::Resolution {
                change,
                limit: RESOLUTION_LIMIT,
            });
        }
        Ok(fine)
    }

    /// Detected fraction on exactly the given grid.
    pub fn signal_unchecked(&self, tau: f64, grid: &GridSpec) -> f64 {
        let p = grid.points_per_period;
        let n = grid.phase_samples;
        let plans = Plans::new(p);
        let t = self.pulse_separation;
        let d = self.period;

        // after G(1) and free flight T
        let mut psi: Vec<Complex64> = (0..p)
            .map(|j| coherent_transmission(j as f64 / p as f64 * d - self.shifts[0], &self.strengths[0], d))
            .collect();
        self.propagate(&plans, &mut psi, t);

        // Fourier coefficients of the G(3) survival mask |t₃(x)|²
        let mut mask: Vec<Complex64> = (0..p)
            .map(|j| {
                Complex64::new(
                    coherent_transmission(j as f64 / p as f64 * d, &self.strengths[2], d).norm_sqr(),
                    0.0,
                )
            })
            .collect();
        plans.forward.process(&mut mask);
        let mask: Vec<Complex64> = mask.into_iter().map(|c| c / p as f64).collect();

        let orders = p / 2 - 1;
        // rows[a][l + orders] = ρ̂_l(δ₂ = a d/n) · M̂_{−l}
        let rows: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|a| {
                let offset = a as f64 / n as f64 * d;
                let mut phi: Vec<Complex64> = psi
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c * coherent_transmission(j as f64 / p as f64 * d - offset, &self.strengths[1], d))
                    .collect();
                let plans = Plans::new(p);
                self.propagate(&plans, &mut phi, t + tau);
                let mut rho: Vec<Complex64> = phi.iter().map(|c| Complex64::new(c.norm_sqr(), 0.0)).collect();
                plans.forward.process(&mut rho);
                (-(orders as i64)..=orders as i64)
                    .map(|l| rho[wrap(l, p)] / p as f64 * mask[wrap(-l, p)])
                    .collect()
            })
            .collect();

        // F_{k,l}: Fourier transform over the G(2) offset
        let width = 2 * orders + 1;
        let column_plan = FftPlanner::new().plan_fft_forward(n);
        let mut coefficients = vec![Complex64::new(0.0, 0.0); n * width];
        for col in 0..width {
            let mut column: Vec<Complex64> = rows.iter().map(|r| r[col]).collect();
            column_plan.process(&mut column);
            for (k, c) in column.into_iter().enumerate() {
                coefficients[k * width + col] = c / n as f64;
            }
        }

        let g = self.gravity;
        let t3 = 2.0 * t + tau;
        let a2 = (self.shifts[1] - 0.5 * g * t * t) / d;
        let a3 = (self.shifts[2] - 0.5 * g * t3 * t3) / d;
        let mut total = NeumaierSum::new();
        for ki in 0..n {
            let k = signed(ki, n) as f64;
            for li in 0..width {
                let l = li as f64 - orders as f64;
                let f = coefficients[ki * width + li];
                let omega = 2.0 * PI * (k * t + l * t3) / (self.mass * d);
                let mut avg = Complex64::new(0.0, 0.0);
                for c in &self.components {
                    let damping = (-0.5 * (c.spread * omega).powi(2)).exp();
                    avg += Complex64::from_polar(c.weight * damping, -c.mean * omega);
                }
                let z = f * Complex64::from_polar(1.0, 2.0 * PI * (k * a2 + l * a3)) * avg;
                total.add(z.re);
            }
        }
        total.value()
    }

    /// Exact free evolution over `duration` of a d-periodic state.
    fn propagate(&self, plans: &Plans, psi: &mut [Complex64], duration: f64) {
        let p = psi.len();
        plans.forward.process(psi);
        let ratio = duration / self.talbot_time;
        for (i, c) in psi.iter_mut().enumerate() {
            let r = signed(i, p) as f64;
            // ħk²t/2m with k = 2πr/d is πr² t/T_T
            *c *= Complex64::from_polar(1.0 / p as f64, -PI * r * r * ratio);
        }
        plans.inverse.process(psi);
    }

    pub fn scan(&self, taus: &[f64], grid: &GridSpec) -> Result<SignalCurve> {
        if taus.is_empty() {
            return Err(Error::EmptyGrid("no tau values".into()));
        }
        let s_off = self.signal(self.tau_off, grid)?;
        let values: Vec<f64> = taus.iter().map(|&tau| self.signal(tau, grid)).collect::<Result<_>>()?;
        SignalCurve::new(
            taus.iter()
                .zip(values)
                .map(|(&tau, s_res)| SignalRecord {
                    tau,
                    s_res,
                    s_off,
                    s_n: (s_res - s_off) / s_off,
                    sigma_sn: 0.0,
                })
                .collect(),
        )
    }
}

fn signed(i: usize, n: usize) -> i64 {
    if i < n.div_ceil(2) {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn wrap(l: i64, n: usize) -> usize {
    l.rem_euclid(n as i64) as usize
}

pub fn quantum_wave_oracle(scenario: &Scenario, tau: f64, grid: &GridSpec) -> Result<f64> {
    WaveOracle::new(scenario)?.signal(tau, grid)
}

pub fn wave_oracle_scan(scenario: &Scenario, grid: &GridSpec) -> Result<SignalCurve> {
    WaveOracle::new(scenario)?.scan(&scenario.timing.tau_grid(), grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grating::absorptive_coefficient;
    use crate::scenario::load_scenario;

    fn argon() -> Scenario {
        load_scenario(include_str!("../../scenarios/argon_n1.toml")).unwrap()
    }

    #[test]
    fn no_gratings_transmit_everything() {
        let mut s = argon();
        for g in &mut s.gratings {
            g.pulse_energy = 0.0;
        }
        let v = quantum_wave_oracle(&s, 30e-9, &GridSpec::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-13);
    }

    #[test]
    fn single_absorptive_grating() {
        let mut s = argon();
        s.gratings[0].pulse_energy = 0.0;
        s.gratings[1].pulse_energy = 0.0;
        s.molecule.polarizability_volume = 1e-40;
        s.set_grating_n0_eff(2, 3.0).unwrap();
        let v = quantum_wave_oracle(&s, 0.0, &GridSpec::default()).unwrap();
        assert!((v - absorptive_coefficient(0, 3.0)).abs() < 1e-12);
    }

    #[test]
    fn talbot_revival_of_first_grating() {
        // with only G(1) and G(3), the pattern after 2T_T revives exactly
        let mut s = argon();
        s.gratings[1].pulse_energy = 0.0;
        s.beam.gravity = 0.0;
        s.beam.tilt = 0.0;
        s.beam.divergence = 0.0;
        s.beam.relative_speed_spread = 0.0;
        let oracle = WaveOracle::new(&s).unwrap();
        let v = oracle.signal(0.0, &GridSpec::default()).unwrap();
        // ⟨|t₁|² |t₃|²⟩ = Σ_l B_l(0)²
        let st = s.strengths().unwrap()[0];
        let expected: f64 = (-20..=20).map(|l| absorptive_coefficient(l, st.n0_eff).powi(2)).sum();
        assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
    }

    #[test]
    fn resolution_is_checked() {
        let mut s = argon();
        s.set_n0_eff(400.0).unwrap();
        let coarse = GridSpec {
            points_per_period: 64,
            phase_samples: 16,
        };
        assert!(matches!(
            quantum_wave_oracle(&s, 0.0, &coarse),
            Err(Error::Resolution { .. })
        ));
    }
}
