//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha8 (`rand_chacha` 0.9),
//! seeded with `seed_from_u64(seed)` and then moved to an independent stream
//! with `set_stream(stream)`. A unit of work (a document, a Monte-Carlo block,
//! a resampling batch) owns one stream, so results never depend on how work is
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator identifier recorded in reports.
pub const GENERATOR: &str = "chacha8/rand_chacha-0.9/seed_from_u64+set_stream";

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derive a child seed so that distinct purposes (documents vs. queries)
/// sharing a user seed do not share streams.
pub fn derive_seed(seed: u64, purpose: &str) -> u64 {
    // FNV-1a over the purpose tag, mixed into the seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in purpose.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    seed ^ h.rotate_left(17)
}
