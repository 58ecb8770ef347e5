//! Domain types for a three-grating time-domain interferometer, physical
//! invariants, and the derived kinematic quantities (period, Talbot time, β).
//!
//! All stored values are SI. Unit-suffixed config input lives in [`config`].

mod config;

use num_rational::Ratio;
use serde::Serialize;

use crate::constants::PLANCK;
use crate::error::{Error, Result};
use crate::grating::{self, GratingStrength};

pub use config::{load_scenario, load_scenario_file, serialize_scenario};

/// Talbot order n as an exact rational (1, 1/2, ...).
pub type TalbotOrder = Ratio<i64>;

/// Talbot time T_T = m d² / h.
pub fn talbot_time(mass: f64, period: f64) -> Result<f64> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::domain(
            "talbot_time",
            format!("mass must be positive, got {mass}"),
        ));
    }
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::domain(
            "talbot_time",
            format!("period must be positive, got {period}"),
        ));
    }
    Ok(mass * period * period / PLANCK)
}

/// de Broglie wavelength h / (m v).
pub fn de_broglie_wavelength(mass: f64, speed: f64) -> Result<f64> {
    if !(mass > 0.0 && speed > 0.0) {
        return Err(Error::domain(
            "de_broglie_wavelength",
            format!("mass and speed must be positive, got m={mass}, v={speed}"),
        ));
    }
    Ok(PLANCK / (mass * speed))
}

/// Absorption-to-phase ratio β = λ_L σ / (8π² α_vol) of a molecule in a
/// standing light wave of wavelength λ_L. Equals n₀/(2φ₀) for any pulse.
pub fn beta_parameter(molecule: &Molecule, wavelength: f64) -> Result<f64> {
    if !(molecule.polarizability_volume > 0.0) {
        return Err(Error::domain(
            "beta_parameter",
            "polarizability volume must be positive",
        ));
    }
    if !(wavelength > 0.0) {
        return Err(Error::domain("beta_parameter", "wavelength must be positive"));
    }
    Ok(wavelength * molecule.absorption_cross_section
        / (8.0 * std::f64::consts::PI.powi(2) * molecule.polarizability_volume))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Molecule {
    pub label: String,
    /// kg
    pub mass: f64,
    /// m²
    pub absorption_cross_section: f64,
    /// α/4πε₀ in m³
    pub polarizability_volume: f64,
}

impl Molecule {
    pub fn new(
        label: impl Into<String>,
        mass: f64,
        absorption_cross_section: f64,
        polarizability_volume: f64,
    ) -> Result<Self> {
        let m = Molecule {
            label: label.into(),
            mass,
            absorption_cross_section,
            polarizability_volume,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::config("molecule.mass", "must be positive"));
        }
        if !(self.absorption_cross_section >= 0.0 && self.absorption_cross_section.is_finite()) {
            return Err(Error::config(
                "molecule.absorption_cross_section",
                "must be non-negative",
            ));
        }
        if !(self.polarizability_volume > 0.0 && self.polarizability_volume.is_finite()) {
            return Err(Error::config("molecule.polarizability_volume", "must be positive"));
        }
        Ok(())
    }
}

/// One pulsed standing-wave grating.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GratingConfig {
    /// J
    pub pulse_energy: f64,
    /// m
    pub wavelength: f64,
    /// m²
    pub illuminated_area: f64,
    pub mirror_reflectivity: f64,
    pub coherence_factor: f64,
    /// m
    pub shift: f64,
}

impl GratingConfig {
    /// Grating period d = λ_L / 2.
    pub fn period(&self) -> f64 {
        self.wavelength / 2.0
    }

    pub fn validate(&self, index: usize) -> Result<()> {
        let field = |name: &str| format!("gratings[{index}].{name}");
        let r = self.mirror_reflectivity;
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::config(
                field("mirror_reflectivity"),
                format!("must lie in (0, 1], got {r}"),
            ));
        }
        let c = self.coherence_factor;
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::config(
                field("coherence_factor"),
                format!("must lie in (0, 1], got {c}"),
            ));
        }
        if !(self.pulse_energy >= 0.0 && self.pulse_energy.is_finite()) {
            return Err(Error::config(field("pulse_energy"), "must be non-negative"));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::config(field("wavelength"), "must be positive"));
        }
        if !(self.illuminated_area > 0.0 && self.illuminated_area.is_finite()) {
            return Err(Error::config(field("illuminated_area"), "must be positive"));
        }
        if !self.shift.is_finite() {
            return Err(Error::config(field("shift"), "must be finite"));
        }
        Ok(())
    }

    /// Nominal and effective strengths of this grating for `molecule`.
    pub fn strength(&self, molecule: &Molecule) -> Result<GratingStrength> {
        let n0 = grating::mean_absorbed_photons(
            self.pulse_energy,
            molecule.absorption_cross_section,
            self.wavelength,
            self.illuminated_area,
        )?;
        let phi0 = grating::eikonal_phase(self.pulse_energy, molecule.polarizability_volume, self.illuminated_area)?;
        GratingStrength::from_nominal(n0, phi0, self.mirror_reflectivity, self.coherence_factor)
    }

    /// Pulse energy that yields the effective strength `n0_eff` for `molecule`.
    pub fn pulse_energy_for_n0_eff(&self, molecule: &Molecule, n0_eff: f64) -> Result<f64> {
        let per_joule = grating::mean_absorbed_photons(
            1.0,
            molecule.absorption_cross_section,
            self.wavelength,
            self.illuminated_area,
        )? * self.mirror_reflectivity
            * self.coherence_factor;
        if !(per_joule > 0.0) {
            return Err(Error::config(
                "n0_eff",
                "cannot set an absorptive strength for a molecule with zero cross section",
            ));
        }
        if !(n0_eff >= 0.0) {
            return Err(Error::config("n0_eff", "must be non-negative"));
        }
        Ok(n0_eff / per_joule)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeamKinematics {
    /// m/s
    pub speed: f64,
    /// Δv/v
    pub relative_speed_spread: f64,
    /// rad
    pub divergence: f64,
    /// rad
    pub tilt: f64,
    /// m/s², projected on the grating vector
    pub gravity: f64,
}

impl BeamKinematics {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(Error::config("beam.speed", "must be positive"));
        }
        if !(self.relative_speed_spread >= 0.0 && self.relative_speed_spread < 0.2) {
            return Err(Error::config("beam.relative_speed_spread", "must lie in [0, 0.2)"));
        }
        if !(self.divergence >= 0.0 && self.divergence < std::f64::consts::FRAC_PI_2) {
            return Err(Error::config("beam.divergence", "must lie in [0, π/2)"));
        }
        if !(self.tilt.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(Error::config("beam.tilt", "|tilt| must be below π/2"));
        }
        if !self.gravity.is_finite() {
            return Err(Error::config("beam.gravity", "must be finite"));
        }
        Ok(())
    }

    /// Transverse tilt velocity p_γ/m = v tan γ.
    pub fn tilt_velocity(&self) -> f64 {
        self.speed * self.tilt.tan()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingConfig {
    #[serde(serialize_with = "serialize_ratio")]
    pub talbot_order: TalbotOrder,
    /// T, s
    pub pulse_separation: f64,
    /// s
    pub tau_min: f64,
    /// s
    pub tau_max: f64,
    /// s
    pub tau_step: f64,
    /// s
    pub tau_off: f64,
}

fn serialize_ratio<S: serde::Serializer>(r: &TalbotOrder, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl TimingConfig {
    pub fn validate(&self) -> Result<()> {
        if *self.talbot_order.numer() <= 0 {
            return Err(Error::config("timing.talbot_order", "must be positive"));
        }
        if !(self.pulse_separation > 0.0 && self.pulse_separation.is_finite()) {
            return Err(Error::config("timing.pulse_separation", "must be positive"));
        }
        if !(self.tau_step > 0.0) {
            return Err(Error::config("timing.tau_step", "must be positive"));
        }
        if !(self.tau_max >= self.tau_min) {
            return Err(Error::config("timing.tau_max", "must not be below tau_min"));
        }
        if !self.tau_off.is_finite() {
            return Err(Error::config("timing.tau_off", "must be finite"));
        }
        Ok(())
    }

    /// Scan grid τ_min, τ_min + Δτ, ..., ≤ τ_max (inclusive within 1e-9 Δτ).
    pub fn tau_grid(&self) -> Vec<f64> {
        let n = ((self.tau_max - self.tau_min) / self.tau_step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.tau_min + i as f64 * self.tau_step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Quantum,
    Classical,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::Quantum => "quantum",
            Model::Classical => "classical",
        }
    }
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quantum" => Ok(Model::Quantum),
            "classical" => Ok(Model::Classical),
            other => Err(Error::config(
                "model",
                format!("expected quantum or classical, got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub molecule: Molecule,
    pub gratings: [GratingConfig; 3],
    pub beam: BeamKinematics,
    pub timing: TimingConfig,
    pub model: Model,
    /// Treat G(1) as a purely absorptive mask, B⁽¹⁾₋ₗ(lτ/T_T) → B⁽¹⁾₋ₗ(0).
    pub g1_absorptive: bool,
}

/// Quantities computed from a scenario, echoed into run metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Derived {
    pub period: f64,
    pub talbot_time: f64,
    pub resonance_time: f64,
    pub de_broglie_wavelength: f64,
    pub beta: f64,
    pub strengths: [GratingStrength; 3],
    pub tilt_velocity: f64,
    pub dip_width: f64,
    pub fringe_period: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.molecule.validate()?;
        for (i, g) in self.gratings.iter().enumerate() {
            g.validate(i)?;
        }
        let lambda = self.gratings[0].wavelength;
        for (i, g) in self.gratings.iter().enumerate().skip(1) {
            if (g.wavelength - lambda).abs() > 1e-12 * lambda {
                return Err(Error::config(
                    format!("gratings[{i}].wavelength"),
                    "all gratings share a single laser wavelength",
                ));
            }
        }
        self.beam.validate()?;
        self.timing.validate()?;
        Ok(())
    }

    pub fn period(&self) -> f64 {
        self.gratings[0].period()
    }

    pub fn talbot_time(&self) -> f64 {
        // validated scenarios have positive mass and period
        talbot_time(self.molecule.mass, self.period()).expect("validated scenario")
    }

    /// n·T_T for the configured Talbot order.
    pub fn resonance_time(&self) -> f64 {
        let n = self.timing.talbot_order;
        self.talbot_time() * (*n.numer() as f64) / (*n.denom() as f64)
    }

    pub(crate) fn resonance_time_checked(&self) -> Result<f64> {
        let tt = talbot_time(self.molecule.mass, self.period())?;
        let n = self.timing.talbot_order;
        Ok(tt * (*n.numer() as f64) / (*n.denom() as f64))
    }

    pub fn beta(&self) -> Result<f64> {
        beta_parameter(&self.molecule, self.gratings[0].wavelength)
    }

    pub fn strengths(&self) -> Result<[GratingStrength; 3]> {
        Ok([
            self.gratings[0].strength(&self.molecule)?,
            self.gratings[1].strength(&self.molecule)?,
            self.gratings[2].strength(&self.molecule)?,
        ])
    }

    /// Set every grating's pulse energy so that n₀,eff equals `n0_eff`.
    pub fn set_n0_eff(&mut self, n0_eff: f64) -> Result<()> {
        for k in 0..3 {
            self.set_grating_n0_eff(k, n0_eff)?;
        }
        Ok(())
    }

    pub fn set_grating_n0_eff(&mut self, k: usize, n0_eff: f64) -> Result<()> {
        let e = self.gratings[k].pulse_energy_for_n0_eff(&self.molecule, n0_eff)?;
        self.gratings[k].pulse_energy = e;
        Ok(())
    }

    /// Change β by rescaling the polarizability volume, leaving n₀ untouched.
    pub fn set_beta(&mut self, beta: f64) -> Result<()> {
        if !(beta > 0.0) || self.molecule.absorption_cross_section <= 0.0 {
            return Err(Error::config(
                "molecule.beta",
                "β override needs β > 0 and a non-zero cross section",
            ));
        }
        let lambda = self.gratings[0].wavelength;
        self.molecule.polarizability_volume =
            lambda * self.molecule.absorption_cross_section / (8.0 * std::f64::consts::PI.powi(2) * beta);
        Ok(())
    }

    pub fn derived(&self) -> Result<Derived> {
        let period = self.period();
        let v = self.beam.speed;
        let tilt_velocity = self.beam.tilt_velocity();
        Ok(Derived {
            period,
            talbot_time: self.talbot_time(),
            resonance_time: self.resonance_time(),
            de_broglie_wavelength: de_broglie_wavelength(self.molecule.mass, v)?,
            beta: self.beta()?,
            strengths: self.strengths()?,
            tilt_velocity,
            dip_width: crate::interferometer::MomentumEnvelope::from_beam(&self.beam, self.molecule.mass)
                .dip_width(self.talbot_time(), period),
            fringe_period: if tilt_velocity != 0.0 {
                period / tilt_velocity.abs()
            } else {
                f64::INFINITY
            },
        })
    }
}
