//! Seed derivation. Every run has one root seed; independent random streams
//! are derived from it by fixed offsets so adding a new consumer never
//! perturbs the existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Offset of the training trace stream.
pub const TRACE: u64 = 0;
/// Offset of the holdout test-sample stream.
pub const HOLDOUT: u64 = 1;
/// Offset used by generators for their concept schedule.
pub const CONCEPTS: u64 = 2;
/// Monte-Carlo run `i` uses offset `MONTE_CARLO + i`.
pub const MONTE_CARLO: u64 = 1 << 32;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic child seed of `root` for stream `offset`.
pub fn derive_seed(root: u64, offset: u64) -> u64 {
    splitmix64(root ^ splitmix64(offset))
}

pub fn rng(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}
