//! Brute-force validators for the analytic signal: a grid wave-propagation
//! solver for the quantum model and a Monte-Carlo trajectory solver for the
//! classical one.

mod compare;
mod monte_carlo;
mod wave;

use serde::Serialize;

use crate::error::{Error, Result};

pub use compare::{compare, compare_statistical, ComparisonReport};
pub use monte_carlo::{classical_mc_oracle, mc_oracle_scan, McEstimate, MonteCarloOracle};
pub use wave::{quantum_wave_oracle, wave_oracle_scan, WaveOracle, RESOLUTION_LIMIT};

/// Discretization of the wave oracle: nodes across one grating period and
/// samples of the second-grating offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridSpec {
    pub points_per_period: usize,
    pub phase_samples: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points_per_period: 128,
            phase_samples: 64,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.points_per_period < 64 {
            return Err(Error::config("grid.points_per_period", "must be at least 64"));
        }
        if self.phase_samples < 16 {
            return Err(Error::config("grid.phase_samples", "must be at least 16"));
        }
        Ok(())
    }

    pub fn doubled(&self) -> Self {
        GridSpec {
            points_per_period: 2 * self.points_per_period,
            phase_samples: 2 * self.phase_samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McSpec {
    pub n_particles: usize,
    pub seed: u64,
}

impl Default for McSpec {
    fn default() -> Self {
        McSpec {
            n_particles: 1_000_000,
            seed: 42,
        }
    }
}
