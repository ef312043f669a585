//! Seeded RNG helpers shared by [`crate::perturb`] and [`crate::fit`].
//!
//! Draws are produced from explicit ChaCha8 streams so that identical seeds
//! give bit-identical results on every platform and in every build mode.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw in `[0, 1)` with 53 random bits.
pub fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    const SCALE: f64 = 1.0 / ((1u64 << 53) as f64);
    (rng.next_u64() >> 11) as f64 * SCALE
}

/// Uniform draw in `[lo, hi)`.
pub fn range_f64(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + unit_f64(rng) * (hi - lo)
}

/// Standard normal via Box-Muller (two uniforms per pair of draws).
pub fn normal_f64(rng: &mut ChaCha8Rng) -> f64 {
    // u in (0, 1] so the log is finite.
    let u = 1.0 - unit_f64(rng);
    let v = unit_f64(rng);
    crate::math::sqrt(-2.0 * crate::math::ln(u))
        * crate::math::cos(2.0 * core::f64::consts::PI * v)
}
