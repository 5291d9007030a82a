//! Seeded random streams.
//!
//! Every stream is ChaCha8 keyed by the 64-bit run seed (expanded with
//! `seed_from_u64`) with the stream number selecting an independent ChaCha
//! stream. The output sequence is fixed across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
