//! Deterministic random streams.
//!
//! Every random quantity in a run is drawn from a ChaCha8 stream whose seed
//! is derived from the master seed plus a tuple of integer tags (trial index,
//! purpose, instant). Streams never depend on scheduling, so results are
//! identical for any thread count.

use rand::SeedableRng;

pub type SimRng = rand_chacha::ChaCha8Rng;

/// Tags naming what a stream is used for.
pub mod purpose {
    pub const GEOMETRY: u64 = 0x6765_6f6d;
    pub const SHADOWING: u64 = 0x7368_6164;
    pub const PHASES: u64 = 0x7068_6173;
    pub const CHANNEL: u64 = 0x6368_616e;
    pub const PILOT: u64 = 0x7069_6c6f;
    pub const DATA: u64 = 0x6461_7461;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a master seed with a sequence of tags into a new 64-bit seed.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ 0x5851_f42d_4c95_7f2d);
    for &t in tags {
        h = splitmix64(h ^ splitmix64(t.wrapping_add(0x2545_f491_4f6c_dd1d)));
    }
    h
}

/// Opens the stream for `(master, tags)`.
pub fn stream(master: u64, tags: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, tags))
}
