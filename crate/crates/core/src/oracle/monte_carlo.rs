//! Classical Monte-Carlo trajectory oracle.
//!
//! Particles start uniformly over a grating period with transverse momentum
//! drawn from the beam's Gaussian distribution, fly ballistically under
//! gravity, receive the dipole kick Δp = ħ ∂φ/∂x at every pulse and carry
//! the product of their survival probabilities |t(x)|² as a weight.
//! Weighting instead of drawing a Bernoulli survival keeps the estimator
//! unbiased with lower variance.
//!
//! Random numbers come from [`crate::random`] with the user seed as key and
//! the batch index as stream id; batches are fixed-size and reduced in index order, so
//! results are bit-identical for every thread count. All delays reuse the
//! same particles.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::McSpec;
use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::grating::GratingStrength;
use crate::interferometer::{MomentumEnvelope, SignalCurve, SignalRecord};
use crate::numeric::NeumaierSum;
use crate::random::{normal_pair, seeded, uniform, PortableRng};
use crate::scenario::{BeamKinematics, Scenario};

const BATCH: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    /// Mean surviving weight.
    pub signal: f64,
    /// Standard error of the mean.
    pub sigma: f64,
}

pub struct MonteCarloOracle {
    strengths: [GratingStrength; 3],
    shifts: [f64; 3],
    period: f64,
    mass: f64,
    pulse_separation: f64,
    tau_off: f64,
    beam: BeamKinematics,
}

struct Particle {
    x: f64,
    velocity: f64,
}

/// Per-batch accumulators: Σw, Σw², Σw·w_off for every delay.
struct Moments {
    sum: Vec<NeumaierSum>,
    sum_sq: Vec<NeumaierSum>,
    cross: Vec<NeumaierSum>,
}

impl Moments {
    fn new(k: usize) -> Self {
        Moments {
            sum: vec![NeumaierSum::new(); k],
            sum_sq: vec![NeumaierSum::new(); k],
            cross: vec![NeumaierSum::new(); k],
        }
    }

    fn merge(&mut self, other: &Moments) {
        for i in 0..self.sum.len() {
            self.sum[i].merge(&other.sum[i]);
            self.sum_sq[i].merge(&other.sum_sq[i]);
            self.cross[i].merge(&other.cross[i]);
        }
    }
}

impl MonteCarloOracle {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        Ok(MonteCarloOracle {
            strengths: scenario.strengths()?,
            shifts: scenario.gratings.each_ref().map(|g| g.shift),
            period: scenario.period(),
            mass: scenario.molecule.mass,
            pulse_separation: scenario.timing.pulse_separation,
            tau_off: scenario.timing.tau_off,
            beam: scenario.beam.clone(),
        })
    }

    fn sample(&self, rng: &mut PortableRng) -> Particle {
        // one period suffices: every grating is d-periodic
        let x = uniform(rng) * self.period;
        let (n1, n2) = normal_pair(rng);
        let v = self.beam.speed * (1.0 + self.beam.relative_speed_spread * n1);
        let spread = MomentumEnvelope::new(self.beam.divergence, v, self.mass).momentum_spread();
        let p = self.mass * v * self.beam.tilt.tan() + spread * n2;
        Particle {
            x,
            velocity: p / self.mass,
        }
    }

    /// Survival weight at grating k and the velocity change from its kick.
    fn pulse(&self, k: usize, x: f64) -> (f64, f64) {
        let s = &self.strengths[k];
        let arg = PI * (x - self.shifts[k]) / self.period;
        let weight = (-s.n0_eff * arg.cos().powi(2)).exp();
        // φ = φ0 cos²(πx/d)  ⇒  ∂φ/∂x = −(π/d) φ0 sin(2πx/d)
        let kick = -HBAR * s.phi0_eff * PI / self.period * (2.0 * arg).sin();
        (weight, kick / self.mass)
    }

    fn weight(&self, particle: &Particle, tau: f64) -> f64 {
        let g = self.beam.gravity;
        let t = self.pulse_separation;
        let fly = |x: &mut f64, u: &mut f64, dt: f64| {
            *x += *u * dt + 0.5 * g * dt * dt;
            *u += g * dt;
        };
        let (mut x, mut u) = (particle.x, particle.velocity);
        let (w1, du) = self.pulse(0, x);
        u += du;
        fly(&mut x, &mut u, t);
        let (w2, du) = self.pulse(1, x);
        u += du;
        fly(&mut x, &mut u, t + tau);
        let (w3, _) = self.pulse(2, x);
        w1 * w2 * w3
    }

    fn moments(&self, taus: &[f64], mc: &McSpec) -> Moments {
        let k = taus.len() + 1;
        let n_batches = mc.n_particles.div_ceil(BATCH);
        let partials: Vec<Moments> = (0..n_batches)
            .into_par_iter()
            .map(|b| {
                let mut rng = seeded(mc.seed, b as u64);
                let mut m = Moments::new(k);
                let count = BATCH.min(mc.n_particles - b * BATCH);
                for _ in 0..count {
                    let particle = self.sample(&mut rng);
                    let w_off = self.weight(&particle, self.tau_off);
                    for (i, &tau) in taus.iter().chain(std::iter::once(&self.tau_off)).enumerate() {
                        let w = if i == k - 1 { w_off } else { self.weight(&particle, tau) };
                        m.sum[i].add(w);
                        m.sum_sq[i].add(w * w);
                        m.cross[i].add(w * w_off);
                    }
                }
                m
            })
            .collect();
        let mut total = Moments::new(k);
        for p in &partials {
            total.merge(p);
        }
        total
    }

    pub fn estimate(&self, tau: f64, mc: &McSpec) -> Result<McEstimate> {
        check_spec(mc)?;
        let m = self.moments(&[tau], mc);
        let n = mc.n_particles as f64;
        let mean = m.sum[0].value() / n;
        let var = (m.sum_sq[0].value() / n - mean * mean).max(0.0);
        Ok(McEstimate {
            signal: mean,
            sigma: (var / n).sqrt(),
        })
    }

    /// S_N(τ) with delta-method standard errors; S_res and S_off share particles.
    pub fn scan(&self, taus: &[f64], mc: &McSpec) -> Result<SignalCurve> {
        check_spec(mc)?;
        if taus.is_empty() {
            return Err(Error::EmptyGrid("no tau values".into()));
        }
        let m = self.moments(taus, mc);
        let n = mc.n_particles as f64;
        let off = taus.len();
        let s_off = m.sum[off].value() / n;
        let off_sq = m.sum_sq[off].value() / n;
        let records = taus
            .iter()
            .enumerate()
            .map(|(i, &tau)| {
                let s_res = m.sum[i].value() / n;
                let ratio = s_res / s_off;
                // Var(w_res − R w_off) with R = S_res/S_off
                let var =
                    (m.sum_sq[i].value() / n - 2.0 * ratio * m.cross[i].value() / n + ratio * ratio * off_sq).max(0.0);
                SignalRecord {
                    tau,
                    s_res,
                    s_off,
                    s_n: ratio - 1.0,
                    sigma_sn: (var / n).sqrt() / s_off,
                }
            })
            .collect();
        SignalCurve::new(records)
    }
}

fn check_spec(mc: &McSpec) -> Result<()> {
    if mc.n_particles == 0 {
        return Err(Error::config("mc.n_particles", "must be positive"));
    }
    Ok(())
}

pub fn classical_mc_oracle(scenario: &Scenario, tau: f64, mc: &McSpec) -> Result<McEstimate> {
    MonteCarloOracle::new(scenario)?.estimate(tau, mc)
}

pub fn mc_oracle_scan(scenario: &Scenario, mc: &McSpec) -> Result<SignalCurve> {
    MonteCarloOracle::new(scenario)?.scan(&scenario.timing.tau_grid(), mc)
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
    fn phase_free_single_grating() {
        let mut s = argon();
        s.gratings[1].pulse_energy = 0.0;
        s.gratings[2].pulse_energy = 0.0;
        s.molecule.polarizability_volume = 1e-60;
        let mc = McSpec {
            n_particles: 200_000,
            seed: 7,
        };
        let est = classical_mc_oracle(&s, 0.0, &mc).unwrap();
        let exact = absorptive_coefficient(0, 3.0);
        assert!((est.signal - exact).abs() < 3.0 * est.sigma, "{est:?} vs {exact}");
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let s = argon();
        let mc = McSpec {
            n_particles: 30_000,
            seed: 42,
        };
        let a = mc_oracle_scan(&s, &mc).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
        let b = pool.install(|| mc_oracle_scan(&s, &mc).unwrap());
        for (x, y) in a.records().iter().zip(b.records()) {
            assert_eq!(x.s_n.to_bits(), y.s_n.to_bits());
            assert_eq!(x.sigma_sn.to_bits(), y.sigma_sn.to_bits());
        }
        let other = mc_oracle_scan(&s, &McSpec { seed: 43, ..mc }).unwrap();
        assert_ne!(a.records()[5].s_res, other.records()[5].s_res);
    }
}
