//! Seedable, splittable random number generation.
//!
//! Every random draw in the crate goes through [`Rng`], which wraps the
//! ChaCha8 stream cipher (`rand_chacha::ChaCha8Rng`). Child generators are
//! derived with [`Rng::fork`]: the child seed is `splitmix64(seed ^ splitmix64(tag))`,
//! so forking never consumes state from the parent and the same `(seed, tag)`
//! pair always yields the same stream.
//!
//! Derived quantities use fixed formulas so that other implementations can
//! reproduce them:
//! - `uniform()` = `(next_u64 >> 11) * 2^-53`, in `[0, 1)`.
//! - `below(n)` = `(next_u64 as u128 * n) >> 64`.
//! - `shuffle` is Fisher-Yates from the last index down, using `below(i + 1)`.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// SplitMix64 finalizer. Used for seed derivation and keyed hashing.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash an ordered sequence of keys into one 64-bit value.
pub fn hash_keys(keys: &[u64]) -> u64 {
    keys.iter()
        .fold(0x6A09_E667_F3BC_C909, |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

/// Map 64 random bits to `[0, 1)` with 53 bits of precision.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream identified by `tag`.
    pub fn fork(&self, tag: u64) -> Rng {
        Rng::new(splitmix64(self.seed ^ splitmix64(tag)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        unit_f64(self.next_u64())
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `[0, n)`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
