//! Counter-style deterministic streams: one ChaCha8 stream per `(seed, n, index)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream(seed: u64, n: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((n << 32) ^ index);
    rng
}
