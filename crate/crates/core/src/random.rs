//! Portable random source shared by the Monte-Carlo oracle and the seeded
//! robustness trials: ChaCha8 keyed by a 64-bit seed, one stream per work
//! unit, uniforms from the top 53 bits, normals by Box–Muller.

use std::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub type PortableRng = ChaCha8Rng;

pub fn seeded(seed: u64, stream: u64) -> PortableRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform in [0, 1).
pub fn uniform(rng: &mut PortableRng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Pair of independent standard normals.
pub fn normal_pair(rng: &mut PortableRng) -> (f64, f64) {
    let u1 = 1.0 - uniform(rng);
    let u2 = uniform(rng);
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (2.0 * PI * u2).sin_cos();
    (r * c, r * s)
}
