//! Deterministic RNG streams.
//!
//! Every particle in a batch gets its own ChaCha stream keyed by the batch seed
//! and its index, so batch results do not depend on how work is split across
//! threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RunRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> RunRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn particle_stream(batch_seed: u64, index: usize) -> RunRng {
    let mut rng = ChaCha8Rng::seed_from_u64(batch_seed);
    rng.set_stream(index as u64);
    rng
}
