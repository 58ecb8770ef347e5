//! TOML scenario files with explicit per-field unit suffixes.
//!
//! Every dimensional key carries its unit in the name (`mass_amu`,
//! `wavelength_nm`, ...). Unknown keys and unknown suffixes are rejected.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use num_rational::Ratio;
use toml::{Table, Value};

use super::{BeamKinematics, GratingConfig, Model, Molecule, Scenario, TalbotOrder, TimingConfig};
use crate::constants::*;
use crate::error::{Error, Result};

struct Quantity {
    name: &'static str,
    units: &'static [(&'static str, f64)],
}

const MASS: Quantity = Quantity {
    name: "mass",
    units: &[("amu", AMU), ("kg", 1.0)],
};
const CROSS_SECTION: Quantity = Quantity {
    name: "absorption_cross_section",
    units: &[("cm2", SQUARE_CENTIMETRE), ("m2", 1.0)],
};
const POLARIZABILITY: Quantity = Quantity {
    name: "polarizability_volume",
    units: &[("A3", CUBIC_ANGSTROM), ("m3", 1.0)],
};
const PULSE_ENERGY: Quantity = Quantity {
    name: "pulse_energy",
    units: &[("uJ", MICROJOULE), ("mJ", MILLIJOULE), ("J", 1.0)],
};
const WAVELENGTH: Quantity = Quantity {
    name: "wavelength",
    units: &[("nm", NANOMETRE), ("m", 1.0)],
};
const AREA: Quantity = Quantity {
    name: "illuminated_area",
    units: &[("mm2", SQUARE_MILLIMETRE), ("cm2", SQUARE_CENTIMETRE), ("m2", 1.0)],
};
const SHIFT: Quantity = Quantity {
    name: "shift",
    units: &[("nm", NANOMETRE), ("m", 1.0)],
};
const SPEED: Quantity = Quantity {
    name: "speed",
    units: &[("m_per_s", 1.0)],
};
const DIVERGENCE: Quantity = Quantity {
    name: "divergence",
    units: &[("mrad", MILLIRADIAN), ("rad", 1.0)],
};
const TILT: Quantity = Quantity {
    name: "tilt",
    units: &[("mrad", MILLIRADIAN), ("rad", 1.0)],
};
const GRAVITY: Quantity = Quantity {
    name: "gravity",
    units: &[("m_per_s2", 1.0)],
};
const PULSE_SEPARATION: Quantity = Quantity {
    name: "pulse_separation",
    units: &[("us", MICROSECOND), ("ns", NANOSECOND), ("s", 1.0)],
};

fn delay(name: &'static str) -> Quantity {
    Quantity {
        name,
        units: &[("ns", NANOSECOND), ("us", MICROSECOND), ("s", 1.0)],
    }
}

/// A TOML table with key bookkeeping so leftovers can be reported.
struct Section<'a> {
    path: String,
    table: &'a Table,
    used: BTreeSet<String>,
}

impl<'a> Section<'a> {
    fn new(path: impl Into<String>, table: &'a Table) -> Self {
        Section {
            path: path.into(),
            table,
            used: BTreeSet::new(),
        }
    }

    fn field(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{}", self.path, key)
        }
    }

    fn get(&mut self, key: &str) -> Option<&'a Value> {
        let v = self.table.get(key);
        if v.is_some() {
            self.used.insert(key.to_string());
        }
        v
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Float(f)) => Ok(Some(*f)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(other) => Err(Error::config(
                self.field(key),
                format!("expected a number, found {}", other.type_str()),
            )),
        }
    }

    fn require_number(&mut self, key: &str) -> Result<f64> {
        self.number(key)?
            .ok_or_else(|| Error::config(self.field(key), "missing field"))
    }

    fn string(&mut self, key: &str) -> Result<Option<String>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(other) => Err(Error::config(
                self.field(key),
                format!("expected a string, found {}", other.type_str()),
            )),
        }
    }

    fn boolean(&mut self, key: &str) -> Result<Option<bool>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(other) => Err(Error::config(
                self.field(key),
                format!("expected a boolean, found {}", other.type_str()),
            )),
        }
    }

    /// Value of a unit-suffixed quantity, converted to SI.
    fn quantity(&mut self, q: &Quantity) -> Result<Option<f64>> {
        let prefix = format!("{}_", q.name);
        let candidates: Vec<&String> = self
            .table
            .keys()
            .filter(|k| k.starts_with(&prefix) || k.as_str() == q.name)
            .collect();
        match candidates.as_slice() {
            [] => Ok(None),
            [key] => {
                let suffix = key.strip_prefix(&prefix).unwrap_or("");
                let factor = q
                    .units
                    .iter()
                    .find(|(u, _)| *u == suffix)
                    .map(|(_, f)| *f)
                    .ok_or_else(|| {
                        let accepted: Vec<&str> = q.units.iter().map(|(u, _)| *u).collect();
                        Error::config(
                            self.field(key),
                            format!(
                                "unknown or missing unit suffix for `{}` (accepted: {})",
                                q.name,
                                accepted.join(", ")
                            ),
                        )
                    })?;
                let key = key.to_string();
                Ok(Some(self.require_number(&key)? * factor))
            }
            _ => Err(Error::config(
                self.field(q.name),
                "given more than once with different units",
            )),
        }
    }

    fn require_quantity(&mut self, q: &Quantity) -> Result<f64> {
        self.quantity(q)?
            .ok_or_else(|| Error::config(self.field(&format!("{}_{}", q.name, q.units[0].0)), "missing field"))
    }

    fn finish(self) -> Result<()> {
        match self.table.keys().find(|k| !self.used.contains(*k)) {
            Some(k) => Err(Error::config(self.field(k), "unknown key")),
            None => Ok(()),
        }
    }
}

fn sub_table<'a>(parent: &mut Section<'a>, key: &str) -> Result<Option<&'a Table>> {
    match parent.get(key) {
        None => Ok(None),
        Some(Value::Table(t)) => Ok(Some(t)),
        Some(other) => Err(Error::config(
            parent.field(key),
            format!("expected a table, found {}", other.type_str()),
        )),
    }
}

fn parse_order(field: &str, value: &Value) -> Result<TalbotOrder> {
    let err = |reason: String| Error::config(field, reason);
    match value {
        Value::Integer(i) => Ok(Ratio::from_integer(*i)),
        Value::String(s) => {
            let s = s.trim();
            let r = match s.split_once('/') {
                Some((n, d)) => {
                    let n: i64 = n.trim().parse().map_err(|_| err(format!("cannot parse `{s}`")))?;
                    let d: i64 = d.trim().parse().map_err(|_| err(format!("cannot parse `{s}`")))?;
                    if d == 0 {
                        return Err(err("zero denominator".into()));
                    }
                    Ratio::new(n, d)
                }
                None => Ratio::from_integer(s.parse().map_err(|_| err(format!("cannot parse `{s}`")))?),
            };
            Ok(r)
        }
        other => Err(err(format!("expected \"n\" or \"p/q\", found {}", other.type_str()))),
    }
}

/// Parse and validate a scenario from TOML text.
pub fn load_scenario(source: &str) -> Result<Scenario> {
    let root: Table = source.parse().map_err(|e: toml::de::Error| {
        let line = e
            .span()
            .map(|s| source[..s.start.min(source.len())].lines().count().max(1) as u64)
            .unwrap_or(0);
        Error::Parse {
            path: "<scenario>".into(),
            line,
            reason: e.message().to_string(),
        }
    })?;
    let mut top = Section::new("", &root);

    let molecule = {
        let t = sub_table(&mut top, "molecule")?.ok_or_else(|| Error::config("molecule", "missing table"))?;
        let mut s = Section::new("molecule", t);
        let m = Molecule {
            label: s.string("label")?.unwrap_or_default(),
            mass: s.require_quantity(&MASS)?,
            absorption_cross_section: s.require_quantity(&CROSS_SECTION)?,
            polarizability_volume: s.require_quantity(&POLARIZABILITY)?,
        };
        s.finish()?;
        m
    };
    molecule.validate()?;

    let defaults = sub_table(&mut top, "grating_defaults")?;
    let grating_list = match top.get("gratings") {
        Some(Value::Array(a)) => a,
        Some(_) => return Err(Error::config("gratings", "expected an array of tables [[gratings]]")),
        None => {
            return Err(Error::config(
                "gratings",
                "missing; three [[gratings]] entries required",
            ))
        }
    };
    if grating_list.len() != 3 {
        return Err(Error::config(
            "gratings",
            format!("exactly three gratings required, found {}", grating_list.len()),
        ));
    }
    let mut gratings = Vec::with_capacity(3);
    for (i, entry) in grating_list.iter().enumerate() {
        let Value::Table(own) = entry else {
            return Err(Error::config(format!("gratings[{i}]"), "expected a table"));
        };
        let mut merged = defaults.cloned().unwrap_or_default();
        for (k, v) in own {
            // a unit-suffixed override replaces the default whatever its unit
            if let Some(base) = quantity_base(k) {
                merged.retain(|dk, _| quantity_base(dk) != Some(base));
            }
            merged.insert(k.clone(), v.clone());
        }
        gratings.push(parse_grating(i, &merged, &molecule)?);
    }

    let beam = {
        let t = sub_table(&mut top, "beam")?.ok_or_else(|| Error::config("beam", "missing table"))?;
        let mut s = Section::new("beam", t);
        let b = BeamKinematics {
            speed: s.require_quantity(&SPEED)?,
            relative_speed_spread: s.number("relative_speed_spread")?.unwrap_or(0.0),
            divergence: s.require_quantity(&DIVERGENCE)?,
            tilt: s.quantity(&TILT)?.unwrap_or(0.0),
            gravity: s.require_quantity(&GRAVITY)?,
        };
        s.finish()?;
        b
    };

    let timing = {
        let t = sub_table(&mut top, "timing")?.ok_or_else(|| Error::config("timing", "missing table"))?;
        let mut s = Section::new("timing", t);
        let order_value = s
            .get("talbot_order")
            .ok_or_else(|| Error::config("timing.talbot_order", "missing field"))?;
        let talbot_order = parse_order("timing.talbot_order", order_value)?;
        let separation = s.quantity(&PULSE_SEPARATION)?;
        let timing = TimingConfig {
            talbot_order,
            pulse_separation: separation.unwrap_or(f64::NAN),
            tau_min: s.require_quantity(&delay("tau_min"))?,
            tau_max: s.require_quantity(&delay("tau_max"))?,
            tau_step: s.require_quantity(&delay("tau_step"))?,
            tau_off: s.require_quantity(&delay("tau_off"))?,
        };
        s.finish()?;
        timing
    };

    let model = match top.string("model")? {
        Some(m) => m.parse()?,
        None => Model::Quantum,
    };
    let g1_absorptive = top.boolean("g1_absorptive")?.unwrap_or(false);
    top.finish()?;

    let mut scenario = Scenario {
        molecule,
        gratings: gratings.try_into().expect("three gratings"),
        beam,
        timing,
        model,
        g1_absorptive,
    };
    if scenario.timing.pulse_separation.is_nan() {
        // default to exact resonance T = n·T_T
        scenario.timing.pulse_separation = scenario.resonance_time_checked()?;
    }
    scenario.validate()?;
    let half_width = scenario.derived()?.dip_width * (2.0 * std::f64::consts::LN_10).sqrt();
    if scenario.timing.tau_off.abs() < half_width {
        log::warn!(
            "tau_off = {:.1} ns lies inside the resonance dip half-width {:.1} ns",
            scenario.timing.tau_off / NANOSECOND,
            half_width / NANOSECOND
        );
    }
    Ok(scenario)
}

fn quantity_base(key: &str) -> Option<&'static str> {
    [PULSE_ENERGY.name, WAVELENGTH.name, AREA.name, SHIFT.name]
        .into_iter()
        .chain(std::iter::once("n0_eff"))
        .find(|b| key == *b || key.starts_with(&format!("{b}_")))
        .map(|b| if b == "n0_eff" { PULSE_ENERGY.name } else { b })
}

fn parse_grating(index: usize, table: &Table, molecule: &Molecule) -> Result<GratingConfig> {
    let mut s = Section::new(format!("gratings[{index}]"), table);
    let energy = s.quantity(&PULSE_ENERGY)?;
    let n0_eff = s.number("n0_eff")?;
    let mut g = GratingConfig {
        pulse_energy: energy.unwrap_or(0.0),
        wavelength: s.require_quantity(&WAVELENGTH)?,
        illuminated_area: s.require_quantity(&AREA)?,
        mirror_reflectivity: s.require_number("mirror_reflectivity")?,
        coherence_factor: s.require_number("coherence_factor")?,
        shift: s.quantity(&SHIFT)?.unwrap_or(0.0),
    };
    s.finish()?;
    g.validate(index)?;
    match (energy, n0_eff) {
        (Some(_), None) => {}
        (None, Some(n)) => {
            g.pulse_energy = g
                .pulse_energy_for_n0_eff(molecule, n)
                .map_err(|e| Error::config(format!("gratings[{index}].n0_eff"), e.to_string()))?;
        }
        (Some(_), Some(_)) => {
            return Err(Error::config(
                format!("gratings[{index}].n0_eff"),
                "give either pulse_energy_* or n0_eff, not both",
            ))
        }
        (None, None) => {
            return Err(Error::config(
                format!("gratings[{index}].pulse_energy_uJ"),
                "missing field (or give n0_eff)",
            ))
        }
    }
    Ok(g)
}

pub fn load_scenario_file(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_scenario(&text).map_err(|e| match e {
        Error::Parse { line, reason, .. } => Error::Parse {
            path: path.display().to_string(),
            line,
            reason,
        },
        other => other,
    })
}

/// Shortest decimal that survives 15 significant digits, so conversion
/// round-off never changes the canonical text.
fn num(v: f64) -> String {
    let rounded: f64 = format!("{v:.14e}").parse().expect("formatted float");
    let s = format!("{rounded}");
    if s.contains(['.', 'e', 'E']) || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

/// Canonical TOML form: fixed key order, canonical units, all defaults explicit.
pub fn serialize_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model = \"{}\"", s.model.as_str());
    let _ = writeln!(out, "g1_absorptive = {}", s.g1_absorptive);
    let _ = writeln!(out);
    let m = &s.molecule;
    let _ = writeln!(out, "[molecule]");
    let _ = writeln!(out, "label = {}", Value::String(m.label.clone()));
    let _ = writeln!(out, "mass_amu = {}", num(m.mass / AMU));
    let _ = writeln!(
        out,
        "absorption_cross_section_cm2 = {}",
        num(m.absorption_cross_section / SQUARE_CENTIMETRE)
    );
    let _ = writeln!(
        out,
        "polarizability_volume_A3 = {}",
        num(m.polarizability_volume / CUBIC_ANGSTROM)
    );
    for g in &s.gratings {
        let _ = writeln!(out);
        let _ = writeln!(out, "[[gratings]]");
        let _ = writeln!(out, "pulse_energy_uJ = {}", num(g.pulse_energy / MICROJOULE));
        let _ = writeln!(out, "wavelength_nm = {}", num(g.wavelength / NANOMETRE));
        let _ = writeln!(
            out,
            "illuminated_area_mm2 = {}",
            num(g.illuminated_area / SQUARE_MILLIMETRE)
        );
        let _ = writeln!(out, "mirror_reflectivity = {}", num(g.mirror_reflectivity));
        let _ = writeln!(out, "coherence_factor = {}", num(g.coherence_factor));
        let _ = writeln!(out, "shift_nm = {}", num(g.shift / NANOMETRE));
    }
    let b = &s.beam;
    let _ = writeln!(out);
    let _ = writeln!(out, "[beam]");
    let _ = writeln!(out, "speed_m_per_s = {}", num(b.speed));
    let _ = writeln!(out, "relative_speed_spread = {}", num(b.relative_speed_spread));
    let _ = writeln!(out, "divergence_mrad = {}", num(b.divergence / MILLIRADIAN));
    let _ = writeln!(out, "tilt_mrad = {}", num(b.tilt / MILLIRADIAN));
    let _ = writeln!(out, "gravity_m_per_s2 = {}", num(b.gravity));
    let t = &s.timing;
    let _ = writeln!(out);
    let _ = writeln!(out, "[timing]");
    let _ = writeln!(out, "talbot_order = \"{}\"", t.talbot_order);
    let _ = writeln!(out, "pulse_separation_us = {}", num(t.pulse_separation / MICROSECOND));
    let _ = writeln!(out, "tau_min_ns = {}", num(t.tau_min / NANOSECOND));
    let _ = writeln!(out, "tau_max_ns = {}", num(t.tau_max / NANOSECOND));
    let _ = writeln!(out, "tau_step_ns = {}", num(t.tau_step / NANOSECOND));
    let _ = writeln!(out, "tau_off_ns = {}", num(t.tau_off / NANOSECOND));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const ARGON: &str = include_str!("../../scenarios/argon_n1.toml");
    const HELIUM: &str = include_str!("../../scenarios/helium_n_half.toml");

    #[test]
    fn argon_example_loads() {
        let s = load_scenario(ARGON).unwrap();
        assert!((s.talbot_time() - 29.286_341_489e-6).abs() < 1e-14);
        assert_eq!(s.timing.talbot_order, Ratio::from_integer(1));
        assert!((s.timing.pulse_separation - s.talbot_time()).abs() < 1e-18);
        assert!((s.beam.divergence - 0.4e-3).abs() < 1e-18);
        assert!((s.beta().unwrap() - 0.597_536_840_346_755).abs() < 1e-13);
        for st in s.strengths().unwrap() {
            assert!((st.n0_eff - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn helium_example_is_half_order() {
        let s = load_scenario(HELIUM).unwrap();
        assert_eq!(s.timing.talbot_order, Ratio::new(1, 2));
        assert!((s.resonance_time() - 14.643_170_744e-6).abs() < 1e-14);
        assert!((s.timing.pulse_separation - s.resonance_time()).abs() < 1e-18);
    }

    #[test]
    fn reflectivity_above_one_is_named() {
        let bad = ARGON.replacen("mirror_reflectivity = 0.97", "mirror_reflectivity = 1.2", 1);
        match load_scenario(&bad) {
            Err(Error::Config { field, .. }) => assert!(field.contains("mirror_reflectivity"), "{field}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_and_unknown_keys() {
        let missing = ARGON.replace("speed_m_per_s = 600.0\n", "");
        match load_scenario(&missing) {
            Err(Error::Config { field, reason }) => {
                assert_eq!(field, "beam.speed_m_per_s");
                assert!(reason.contains("missing"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let wrong_unit = ARGON.replace("mass_amu", "mass_g");
        match load_scenario(&wrong_unit) {
            Err(Error::Config { field, reason }) => {
                assert_eq!(field, "molecule.mass_g");
                assert!(reason.contains("amu"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let extra = format!("{ARGON}\n[extra]\nfoo = 1\n");
        assert!(matches!(load_scenario(&extra), Err(Error::Config { field, .. }) if field == "extra"));
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let broken = "model = \"quantum\"\n[molecule\nmass_amu = 1\n";
        match load_scenario(broken) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn units_convert_to_si() {
        let s = load_scenario(ARGON).unwrap();
        let text = serialize_scenario(&s);
        let mj = text
            .replace("mass_amu = 1882.0", "mass_kg = 3.1251345e-24")
            .replace("tau_step_ns = 20.0", "tau_step_us = 0.02");
        let t = load_scenario(&mj).unwrap();
        assert!((t.molecule.mass - 3.1251345e-24).abs() < 1e-36);
        assert!((t.timing.tau_step - 20e-9).abs() < 1e-12 * 20e-9);
    }

    #[test]
    fn serialization_round_trips() {
        for src in [ARGON, HELIUM] {
            let s = load_scenario(src).unwrap();
            let normal = serialize_scenario(&s);
            let again = load_scenario(&normal).unwrap();
            assert_eq!(serialize_scenario(&again), normal);
            let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
            assert!(rel(s.molecule.mass, again.molecule.mass));
            assert!(rel(s.gratings[1].pulse_energy, again.gratings[1].pulse_energy));
            assert!(rel(s.timing.pulse_separation, again.timing.pulse_separation));
            assert!(rel(s.beam.tilt, again.beam.tilt));
        }
    }

    #[test]
    fn energy_and_n0_eff_are_exclusive() {
        let both = ARGON.replacen("n0_eff = 3.0", "n0_eff = 3.0\npulse_energy_uJ = 10.0", 1);
        assert!(load_scenario(&both).is_err());
    }
}
