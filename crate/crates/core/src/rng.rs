//! Counter-based random streams.
//!
//! A stream is identified by a 64-bit id derived by hashing its parent id with a
//! purpose tag and counters. Draws never depend on scheduling order: any worker
//! can rebuild the generator for `(global seed, seed digest, variant, purpose)`
//! on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(GOLDEN);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn tag_hash(tag: &str) -> u64 {
    // FNV-1a, stable across platforms and releases.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Identifier of an independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Stream(u64);

impl Stream {
    pub fn root(seed: u64) -> Self {
        Stream(splitmix(seed ^ 0x6769_6678_726f_6f74))
    }

    pub fn from_id(id: u64) -> Self {
        Stream(id)
    }

    pub fn id(self) -> u64 {
        self.0
    }

    /// Child stream for `(purpose, counter)`.
    pub fn derive(self, purpose: &str, counter: u64) -> Self {
        let mut h = splitmix(self.0 ^ tag_hash(purpose));
        h = splitmix(h ^ counter.wrapping_mul(GOLDEN));
        Stream(h)
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}
