//! Scenario parameter paths and sweep metrics.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{fit_fringe, PhaseMode};
use crate::constants::{AMU, CUBIC_ANGSTROM, MICROSECOND, MILLIRADIAN, NANOMETRE, NANOSECOND, SQUARE_CENTIMETRE};
use crate::error::{Error, Result};
use crate::interferometer::{visibility, SignalModel};
use crate::scenario::{Model, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    Beta,
    Mass,
    CrossSection,
    Polarizability,
    N0Eff(Option<usize>),
    Shift(Option<usize>),
    Speed,
    SpeedSpread,
    Divergence,
    Tilt,
    Gravity,
    PulseSeparation,
    TauOff,
}

/// A settable scenario quantity, e.g. `gratings.*.n0_eff` or `beam.tilt_mrad`.
/// A unit suffix scales the value; without one it is SI.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPath {
    text: String,
    target: Target,
    scale: f64,
}

impl fmt::Display for ParameterPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

fn split_unit<'a>(name: &'a str, units: &[(&str, f64)]) -> (&'a str, f64) {
    for (suffix, factor) in units {
        if let Some(base) = name.strip_suffix(suffix) {
            if let Some(base) = base.strip_suffix('_') {
                return (base, *factor);
            }
        }
    }
    (name, 1.0)
}

fn grating_index(part: &str) -> Option<Option<usize>> {
    match part {
        "*" => Some(None),
        "1" | "2" | "3" => Some(Some(part.parse::<usize>().ok()? - 1)),
        _ => None,
    }
}

impl FromStr for ParameterPath {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let unknown = || Error::config(text, "unknown parameter path");
        let parts: Vec<&str> = text.split('.').collect();
        let units: &[(&str, f64)] = &[
            ("amu", AMU),
            ("cm2", SQUARE_CENTIMETRE),
            ("A3", CUBIC_ANGSTROM),
            ("nm", NANOMETRE),
            ("ns", NANOSECOND),
            ("us", MICROSECOND),
            ("mrad", MILLIRADIAN),
            ("m_per_s2", 1.0),
            ("m_per_s", 1.0),
        ];
        let (target, scale) = match parts.as_slice() {
            ["molecule", "beta" | "beta-override"] => (Target::Beta, 1.0),
            ["molecule", name] => {
                let (base, f) = split_unit(name, units);
                let t = match base {
                    "mass" => Target::Mass,
                    "absorption_cross_section" => Target::CrossSection,
                    "polarizability_volume" => Target::Polarizability,
                    _ => return Err(unknown()),
                };
                (t, f)
            }
            ["gratings", k, name] => {
                let k = grating_index(k).ok_or_else(unknown)?;
                let (base, f) = split_unit(name, units);
                match base {
                    "n0_eff" => (Target::N0Eff(k), 1.0),
                    "shift" => (Target::Shift(k), f),
                    _ => return Err(unknown()),
                }
            }
            ["beam", name] => {
                let (base, f) = split_unit(name, units);
                let t = match base {
                    "speed" => Target::Speed,
                    "relative_speed_spread" => Target::SpeedSpread,
                    "divergence" => Target::Divergence,
                    "tilt" => Target::Tilt,
                    "gravity" => Target::Gravity,
                    _ => return Err(unknown()),
                };
                (t, f)
            }
            ["timing", name] => {
                let (base, f) = split_unit(name, units);
                let t = match base {
                    "pulse_separation" => Target::PulseSeparation,
                    "tau_off" => Target::TauOff,
                    _ => return Err(unknown()),
                };
                (t, f)
            }
            _ => return Err(unknown()),
        };
        Ok(ParameterPath {
            text: text.to_string(),
            target,
            scale,
        })
    }
}

impl ParameterPath {
    /// Apply `value` (in the path's unit) and re-validate.
    pub fn apply(&self, scenario: &mut Scenario, value: f64) -> Result<()> {
        let v = value * self.scale;
        let gratings = |k: Option<usize>| match k {
            Some(k) => k..k + 1,
            None => 0..3,
        };
        match self.target {
            Target::Beta => scenario.set_beta(v)?,
            Target::Mass => scenario.molecule.mass = v,
            Target::CrossSection => {
                // keep n₀,eff fixed: it is the configured quantity
                let n0: Vec<f64> = scenario.strengths()?.iter().map(|s| s.n0_eff).collect();
                scenario.molecule.absorption_cross_section = v;
                for (k, n) in n0.into_iter().enumerate() {
                    scenario.set_grating_n0_eff(k, n)?;
                }
            }
            Target::Polarizability => scenario.molecule.polarizability_volume = v,
            Target::N0Eff(k) => {
                for i in gratings(k) {
                    scenario.set_grating_n0_eff(i, v)?;
                }
            }
            Target::Shift(k) => {
                for i in gratings(k) {
                    scenario.gratings[i].shift = v;
                }
            }
            Target::Speed => scenario.beam.speed = v,
            Target::SpeedSpread => scenario.beam.relative_speed_spread = v,
            Target::Divergence => scenario.beam.divergence = v,
            Target::Tilt => scenario.beam.tilt = v,
            Target::Gravity => scenario.beam.gravity = v,
            Target::PulseSeparation => scenario.timing.pulse_separation = v,
            Target::TauOff => scenario.timing.tau_off = v,
        }
        scenario.validate()
    }
}

/// `path=value` override.
pub fn parse_override(text: &str) -> Result<(ParameterPath, f64)> {
    let (path, value) = text
        .split_once('=')
        .ok_or_else(|| Error::config(text, "expected PATH=VALUE"))?;
    let value = value
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::config(path.trim(), format!("`{}` is not a number", value.trim())))?;
    Ok((path.trim().parse()?, value))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
pub enum Metric {
    /// 2|S₁|/S₀ at τ = 0
    #[value(name = "visibility")]
    Visibility,
    /// S_N(τ = 0)
    #[value(name = "S_N_at_resonance")]
    SnAtResonance,
    /// fitted σ_p of the τ scan, ns
    #[value(name = "fringe_period")]
    FringePeriod,
}

impl Metric {
    pub fn column(self) -> &'static str {
        match self {
            Metric::Visibility => "visibility",
            Metric::SnAtResonance => "S_N_at_resonance",
            Metric::FringePeriod => "fringe_period_ns",
        }
    }

    pub fn evaluate(self, scenario: &Scenario) -> Result<f64> {
        match self {
            Metric::Visibility => Ok(visibility(scenario)?.sinusoidal),
            Metric::SnAtResonance => SignalModel::new(scenario)?.normalized_signal(0.0),
            Metric::FringePeriod => {
                let curve = SignalModel::new(scenario)?.scan(&scenario.timing.tau_grid())?;
                let fit = fit_fringe(&curve, scenario.timing.tau_off, PhaseMode::Free, None)?;
                Ok(fit.params.sigma_p / NANOSECOND)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub model: Model,
    pub metric: f64,
}

/// Every (value, model) pair evaluated independently; rows sorted by value
/// then model order.
pub fn run_sweep(
    base: &Scenario,
    path: &ParameterPath,
    values: &[f64],
    models: &[Model],
    metric: Metric,
) -> Result<Vec<SweepRow>> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let jobs: Vec<(f64, Model)> = sorted
        .iter()
        .flat_map(|&v| models.iter().map(move |&m| (v, m)))
        .collect();
    jobs.par_iter()
        .map(|&(value, model)| {
            let mut s = base.clone();
            s.model = model;
            path.apply(&mut s, value)
                .map_err(|e| Error::Sweep(format!("{path} = {value}: {e}")))?;
            let metric = metric
                .evaluate(&s)
                .map_err(|e| Error::Sweep(format!("{path} = {value} ({}): {e}", model.as_str())))?;
            Ok(SweepRow { value, model, metric })
        })
        .collect()
}

/// `start:stop:count`, linear or logarithmic.
pub fn grid_values(spec: &str, log: bool) -> Result<Vec<f64>> {
    let bad = || Error::config("--range", format!("expected START:STOP:COUNT, got `{spec}`"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, count] = parts.as_slice() else {
        return Err(bad());
    };
    let start: f64 = start.trim().parse().map_err(|_| bad())?;
    let stop: f64 = stop.trim().parse().map_err(|_| bad())?;
    let count: usize = count.trim().parse().map_err(|_| bad())?;
    if count == 0 {
        return Err(Error::config("--range", "count must be at least 1"));
    }
    if log && !(start > 0.0 && stop > 0.0) {
        return Err(Error::config("--range", "a logarithmic grid needs positive bounds"));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    Ok((0..count)
        .map(|i| {
            let f = i as f64 / (count - 1) as f64;
            if log {
                (start.ln() + f * (stop.ln() - start.ln())).exp()
            } else {
                start + f * (stop - start)
            }
        })
        .collect())
}
