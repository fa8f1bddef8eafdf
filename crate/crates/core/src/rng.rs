//! Seeded random streams.
//!
//! A stream is keyed by a base seed and a list of ordinals (sentence index,
//! technique id, copy index, epoch, ...). Each key component is folded in
//! with the SplitMix64 finalizer and the result seeds a ChaCha8 generator,
//! so every stream is independent of the order in which streams are created.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RandomStream(ChaCha8Rng);

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RandomStream {
    pub fn derive(seed: u64, key: &[u64]) -> Self {
        let mixed = key
            .iter()
            .fold(splitmix64(seed), |acc, &k| splitmix64(acc ^ splitmix64(k)));
        RandomStream(ChaCha8Rng::seed_from_u64(mixed))
    }

    /// Stream for one augmented copy of one sentence.
    pub fn for_sentence(seed: u64, sentence: usize, technique: u64, copy: usize) -> Self {
        Self::derive(seed, &[sentence as u64, technique, copy as u64])
    }

    /// One Bernoulli(p) draw. `p` is clamped to [0, 1].
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.0.random_bool(p.clamp(0.0, 1.0))
    }

    /// Uniform index in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        self.0.random_range(0..n)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}
