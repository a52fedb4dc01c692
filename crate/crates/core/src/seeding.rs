//! Deterministic seed derivation.
//!
//! Every randomized component (clustering restarts, per-video generation,
//! per-cycle selection, epoch shuffling) draws from its own ChaCha stream
//! seeded through [`derive_seed`], so results are independent of evaluation
//! order and worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; decorrelates `(base, stream)` pairs into fresh seeds.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Portable seeded RNG used everywhere randomness is needed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// In-place Fisher-Yates shuffle under a fresh stream for `seed`.
pub fn seeded_shuffle<T>(items: &mut [T], seed: u64) {
    use rand::seq::SliceRandom;
    items.shuffle(&mut rng_from_seed(seed));
}
