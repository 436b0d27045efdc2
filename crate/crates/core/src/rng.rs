//! Seeded random streams.
//!
//! Xoshiro256++ seeded through SplitMix64, so a `(seed, index)` pair names a
//! stream independently of how many other streams exist. Uniforms take the top
//! 53 bits; Gaussians use Box-Muller.

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub struct Stream {
    inner: Xoshiro256PlusPlus,
    spare: Option<f64>,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self { inner: Xoshiro256PlusPlus::seed_from_u64(seed), spare: None }
    }

    /// Stream number `index` of the family named by `seed`.
    pub fn derived(seed: u64, index: u64) -> Self {
        let mut mix = SplitMix64::seed_from_u64(seed ^ index.wrapping_add(1).wrapping_mul(GOLDEN));
        let key = mix.next_u64() ^ index;
        Self::new(key)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal deviate.
    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - u lies in (0, 1], keeping the log finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}
