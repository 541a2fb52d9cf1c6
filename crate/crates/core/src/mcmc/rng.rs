//! Per-chain random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream for chain `chain`: ChaCha8 keyed by `seed`, on stream `chain`.
/// Streams never overlap, and a chain's draws do not depend on how many
/// other chains exist.
pub fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}
