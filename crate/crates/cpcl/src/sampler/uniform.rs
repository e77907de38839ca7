//! Seeded uniform randomness.
//!
//! Every random draw in the simulator flows through a [`UniformSource`]
//! keyed by `(seed, stream)`. Identical keys replay identical sequences;
//! parallel workers take distinct stream ids.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Deterministic stream of uniforms on the open interval `(0, 1)`.
#[derive(Debug, Clone)]
pub struct UniformSource {
    rng: ChaCha12Rng,
    seed: u64,
    stream: u64,
}

impl UniformSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        UniformSource { rng, seed, stream }
    }

    /// Derive an independent source for a sub-task. The child is keyed by
    /// a mix of this source's identity and the caller's tag, so derivation
    /// is stable under replay and children never alias their parent.
    pub fn derive(&self, tag: u64) -> UniformSource {
        // splitmix-style mixing of (seed, stream, tag)
        let mut z = self
            .seed
            .wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(self.stream | 1));
        z ^= tag.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        UniformSource::new(z ^ (z >> 31), tag)
    }

    /// Raw 64 uniform bits.
    #[inline]
    pub fn next_raw(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform real strictly inside `(0, 1)`: 53 random bits offset by
    /// half an ulp, so neither endpoint is reachable.
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_raw() >> 11) as f64 + 0.5) * 2f64.powi(-53)
    }

    /// Uniform integer in `[0, n)` by rejection, exact for any `n > 0`.
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        let zone = u64::MAX - (u64::MAX - n + 1) % n;
        loop {
            let v = self.next_raw();
            if v <= zone {
                return v % n;
            }
        }
    }
}
