//! Seed derivation.
//!
//! All randomness goes through ChaCha8 (`rand_chacha`), which is portable
//! and supports independent streams under one seed. A stream index is used
//! for every logically separate consumer (a channel, a round, a client) so
//! that adding a consumer never perturbs the draws of another.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A ChaCha8 generator for `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed, independent across distinct `stream` values.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    stream_rng(seed, stream).next_u64()
}
