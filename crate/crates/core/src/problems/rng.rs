//! Deterministic random streams for instance generation.
//!
//! The generator is xoshiro256++ whose 256-bit state is filled from the
//! 64-bit seed with SplitMix64. Uniforms take the top 53 bits of each output,
//! `u = (next_u64 >> 11) · 2⁻⁵³ ∈ [0, 1)`. Standard normals use the
//! Box–Muller transform on `(1 − u₁, u₂)`, returning the cosine branch first
//! and caching the sine branch for the next call. Any implementation of
//! these three steps reproduces every instance bit for bit.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

#[derive(Clone, Debug)]
pub struct SeededRng {
    inner: Xoshiro256PlusPlus,
    spare: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Stream for initial points: the instance stream advanced by one
    /// xoshiro jump (2¹²⁸ steps), so it never overlaps instance data.
    pub fn initial_point_stream(seed: u64) -> Self {
        let mut inner = Xoshiro256PlusPlus::seed_from_u64(seed);
        inner.jump();
        SeededRng { inner, spare: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box–Muller.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    pub fn normals(&mut self, len: usize, std_dev: f64) -> Vec<f64> {
        (0..len).map(|_| std_dev * self.normal()).collect()
    }

    pub fn uniforms(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.uniform()).collect()
    }
}
