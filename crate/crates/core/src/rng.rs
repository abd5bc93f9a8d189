//! Reproducible random streams.
//!
//! Every consumer draws from a ChaCha8 stream addressed by `(seed, stream)`:
//! the 64-bit seed keys the cipher and the stream number selects one of its
//! 2^64 independent nonces. A path, replication or draw is therefore a pure
//! function of its index, no matter how work is partitioned across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a tag (horizon index, purpose, ...).
pub fn derive_seed(parent: u64, tag: u64) -> u64 {
    mix64(parent ^ mix64(tag.wrapping_add(0x5851_F42D_4C95_7F2D)))
}
