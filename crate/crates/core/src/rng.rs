//! Deterministic random streams.
//!
//! Every stream is a xoshiro256++ generator whose 256-bit state is filled
//! from the 64-bit seed with SplitMix64 (the reference seeding procedure of
//! the xoshiro authors). Derived quantities are defined on top of the raw
//! `u64` output so that any implementation can reproduce them:
//!
//! - uniform `[0, 1)`: `(x >> 11) * 2^-53`
//! - index below `n`: high 64 bits of the 128-bit product `x * n`
//! - standard normal: Box-Muller, `sqrt(-2 ln(1 - u1)) * cos(2π u2)`, two
//!   uniforms per draw, no caching
//! - shuffle: Fisher-Yates from the last position down
//!
//! Child streams for parallel or per-item work come from [`Seed::child`],
//! never from sharing a stream.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// 64-bit seed. Equal seeds give bit-identical streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Seed(pub u64);

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Seed {
    /// Seed of the `index`-th child stream: `splitmix64(seed ^ splitmix64(index))`.
    pub fn child(self, index: u64) -> Seed {
        Seed(splitmix64(self.0 ^ splitmix64(index)))
    }

    pub fn rng(self) -> SeededRng {
        SeededRng::new(self)
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

/// Single-owner random stream.
#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: Xoshiro256PlusPlus,
}

impl SeededRng {
    pub fn new(seed: Seed) -> Self {
        Self {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed.0),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Index in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// Draw index `i` with probability proportional to `weights[i]`.
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let target = self.uniform() * total;
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if target < acc {
                return i;
            }
        }
        // rounding can leave target == total
        weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
    }

    /// `count` distinct indices from `0..n`, sorted ascending (Floyd's algorithm).
    pub fn sample_indices(&mut self, n: usize, count: usize) -> Vec<usize> {
        assert!(count <= n, "cannot sample {count} of {n}");
        let mut chosen = std::collections::BTreeSet::new();
        for j in (n - count)..n {
            let t = self.below(j + 1);
            if !chosen.insert(t) {
                chosen.insert(j);
            }
        }
        chosen.into_iter().collect()
    }
}

/// Stream for `seed`.
pub fn seeded_rng(seed: Seed) -> SeededRng {
    SeededRng::new(seed)
}
