//! Seeded randomness: labelled sub-seeds and uniform random input vectors.

use core::hash::Hasher;

use alloc::vec::Vec;
use fnv::FnvHasher;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sim::InputVector;

/// Derives an independent seed for a named consumer of a global seed, so that
/// adding or removing one consumer does not shift the stream of another.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write_u64(seed);
    h.write(label.as_bytes());
    // splitmix64 finalizer
    let mut z = h.finish().wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Endless stream of uniform i.i.d. input vectors.
pub struct VectorStream {
    rng: ChaCha8Rng,
    width: usize,
}

impl VectorStream {
    pub fn new(width: usize, seed: u64) -> Self {
        VectorStream {
            rng: seeded_rng(seed),
            width,
        }
    }
}

impl Iterator for VectorStream {
    type Item = InputVector;

    fn next(&mut self) -> Option<InputVector> {
        let mut bits = Vec::with_capacity(self.width);
        while bits.len() < self.width {
            let word: u64 = self.rng.random();
            let take = (self.width - bits.len()).min(64);
            bits.extend((0..take).map(|i| (word >> i) & 1 == 1));
        }
        Some(InputVector::new(bits))
    }
}
