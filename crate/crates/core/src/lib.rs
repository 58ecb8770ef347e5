//! Simulation and analysis of time-domain optical Talbot–Lau matter-wave
//! interferometers.
//!
//! The crate computes quantum and classical fringe signals from the
//! Talbot-coefficient series ([`interferometer`]), checks them against
//! brute-force wave and trajectory solvers ([`oracle`]) and fits
//! interferograms to recover beam and molecular parameters ([`analysis`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bessel;
pub mod cli;
pub mod constants;
pub mod error;
pub mod grating;
pub mod interferometer;
pub mod io;
pub mod numeric;
pub mod oracle;
pub mod random;
pub mod scenario;

pub use error::{Error, Result};
