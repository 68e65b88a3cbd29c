//! Seeded randomness.
//!
//! Every random draw in the crate goes through [`seeded`], so a split or a
//! synthetic corpus is fully determined by its seed and this generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name and version of the generator, recorded in every report.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9, seed_from_u64)";

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent stream for a sub-task so that adding draws in one
/// stage never shifts another.
pub fn substream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
