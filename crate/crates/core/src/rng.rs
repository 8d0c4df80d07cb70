// SPDX-License-Identifier: Apache-2.0

//! Seeded random source shared by every stochastic stage.
//!
//! The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded through
//! `SeedableRng::seed_from_u64`. ChaCha output is defined bit-for-bit by its
//! reference algorithm, so the same seed and call sequence yields the same
//! values on every platform.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Identifier written next to seeds in manifests.
pub const ALGORITHM: &str = "chacha8/seed_from_u64";

/// A single-owner deterministic random stream.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// An independent stream for sub-task `index`, derived from this source's
    /// seed only (never from its current position), so derived streams do
    /// not depend on how much of the parent stream was consumed.
    pub fn derive(&self, index: u64) -> RandomSource {
        RandomSource::new(mix(self.seed, index))
    }

    /// Uniform real in `[lo, hi)`; returns `lo` when the range is empty.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return lo;
        }
        self.rng.gen_range(lo..hi)
    }

    /// Uniform integer in `lo..=hi`.
    pub fn uniform_int(&mut self, lo: usize, hi: usize) -> usize {
        if hi <= lo {
            return lo;
        }
        self.rng.gen_range(lo..=hi)
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn coin(&mut self) -> bool {
        self.rng.gen_bool(0.5)
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.rng.gen_range(0..=i);
            items.swap(i, j);
        }
    }

    /// `count` distinct indices from `0..n` in random order.
    pub fn sample_indices(&mut self, n: usize, count: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        let count = count.min(n);
        for i in 0..count {
            let j = self.rng.gen_range(i..n);
            idx.swap(i, j);
        }
        idx.truncate(count);
        idx
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

// splitmix64 finalizer over (seed, index)
fn mix(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = RandomSource::new(42);
        let mut b = RandomSource::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_eq!(a.uniform(0.0, 1.0).to_bits(), b.uniform(0.0, 1.0).to_bits());
    }

    #[test]
    fn derived_streams_ignore_parent_position() {
        let a = RandomSource::new(7);
        let mut b = RandomSource::new(7);
        b.next_u64();
        assert_eq!(a.derive(3).next_u64(), b.derive(3).next_u64());
        assert_ne!(a.derive(3).next_u64(), a.derive(4).next_u64());
    }

    #[test]
    fn sample_indices_distinct() {
        let mut r = RandomSource::new(1);
        let mut s = r.sample_indices(50, 20);
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 20);
        assert!(s.iter().all(|&i| i < 50));
    }

    #[test]
    fn uniform_int_inclusive_bounds() {
        let mut r = RandomSource::new(9);
        let draws: Vec<usize> = (0..500).map(|_| r.uniform_int(2, 4)).collect();
        assert!(draws.contains(&2) && draws.contains(&4));
        assert!(draws.iter().all(|&d| (2..=4).contains(&d)));
    }
}
