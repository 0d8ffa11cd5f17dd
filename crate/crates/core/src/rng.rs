//! Seeded randomness shared by every generator in the workspace.
//!
//! All streams are SplitMix64. Bounded integers use Lemire's multiply-shift
//! with rejection, probabilities use the top 53 bits of a draw, and shuffles
//! are Fisher-Yates from the last index down. Nothing here goes through
//! `rand`'s distribution layer, so the exact sequence of values for a seed is
//! fixed by this file alone.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed for `stream` under `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix64(seed ^ mix64(stream.wrapping_add(1).wrapping_mul(GOLDEN)))
}

/// Bit that separates training seeds from evaluation seeds.
pub const EVAL_SEED_BIT: u64 = 1 << 63;

/// Seed of the `index`-th training instance under `root`. Never has the
/// evaluation bit set.
pub fn training_seed(root: u64, index: u64) -> u64 {
    derive_seed(root, index) & !EVAL_SEED_BIT
}

/// Seed of the `index`-th evaluation instance under `root`. Always has the
/// evaluation bit set, so it can never collide with a training seed.
pub fn eval_seed(root: u64, index: u64) -> u64 {
    derive_seed(root ^ 0x005E_ED0F_7E57, index) | EVAL_SEED_BIT
}

#[derive(Clone, Debug)]
pub struct SeededRng {
    inner: SplitMix64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: SplitMix64::seed_from_u64(seed),
        }
    }

    pub fn derived(seed: u64, stream: u64) -> Self {
        Self::new(derive_seed(seed, stream))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `[0, n)`. Panics when `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = u128::from(self.next_u64()) * u128::from(n);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    pub fn index(&mut self, len: usize) -> usize {
        self.below(len as u64) as usize
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn range_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi);
        lo + self.below(hi - lo + 1)
    }

    /// Uniform float in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    pub fn choose<'a, T>(&mut self, items: &'a [T]) -> Option<&'a T> {
        if items.is_empty() {
            None
        } else {
            Some(&items[self.index(items.len())])
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}
