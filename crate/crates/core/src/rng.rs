//! Seeded, splittable random streams.
//!
//! A study has one root seed; replication `k` draws from stream `k` of the
//! ChaCha8 generator keyed by that seed. Streams are independent of the
//! order or thread in which replications run.

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

pub type StreamRng = ChaCha8Rng;

/// Generator for stream `stream` under `root_seed`.
pub fn stream_rng(root_seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
    rng.set_stream(stream);
    rng
}
