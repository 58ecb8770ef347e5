//! Physical constants (CODATA 2018 exact SI values where defined) and the unit
//! factors accepted by the scenario config. Everything inside the crate is SI.

use std::f64::consts::PI;

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
/// Unified atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Standard gravity, m/s².
pub const STANDARD_GRAVITY: f64 = 9.806_65;

pub const NANOMETRE: f64 = 1e-9;
pub const NANOSECOND: f64 = 1e-9;
pub const MICROSECOND: f64 = 1e-6;
pub const MICROJOULE: f64 = 1e-6;
pub const MILLIJOULE: f64 = 1e-3;
pub const MILLIRADIAN: f64 = 1e-3;
pub const SQUARE_CENTIMETRE: f64 = 1e-4;
pub const SQUARE_MILLIMETRE: f64 = 1e-6;
pub const CUBIC_ANGSTROM: f64 = 1e-30;
pub const FEMTOMETRE: f64 = 1e-15;

/// SI polarizability α (C·m²/V) from a polarizability volume α/4πε₀ (m³).
///
/// The crate stores polarizabilities as volumes; the optical formulas in
/// [`crate::grating`] are written in the volume convention, so this
/// conversion is only needed when reporting α in SI.
pub fn polarizability_si(volume: f64) -> f64 {
    4.0 * PI * VACUUM_PERMITTIVITY * volume
}

/// Inverse of [`polarizability_si`].
pub fn polarizability_volume(alpha_si: f64) -> f64 {
    alpha_si / (4.0 * PI * VACUUM_PERMITTIVITY)
}
