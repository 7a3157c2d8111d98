//! Splittable, counter-style seed streams.
//!
//! Parallel sweeps must be reproducible regardless of worker count or
//! scheduling, so no RNG is ever shared between tasks. Instead every task
//! derives its own ChaCha stream from a [`SeedTree`] keyed by the master seed
//! plus a path of labels and indices, e.g.
//! `SeedTree::new(master).child("disorder").index(k)`.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// A node in the seed-derivation tree. Cheap to copy; children are derived by
/// mixing labels/indices into the node's 64-bit key with a fixed hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    key: u64,
}

// splitmix64: the standard finalizer used to decorrelate derived streams.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SeedTree {
    pub fn new(master_seed: u64) -> Self {
        SeedTree {
            key: splitmix64(master_seed ^ 0x6f74_6f63_2d6c_6162),
        }
    }

    /// Derive a labeled child stream. Distinct labels give decorrelated keys.
    pub fn child(&self, label: &str) -> Self {
        let mut k = self.key;
        for chunk in label.as_bytes().chunks(8) {
            let mut word = [0u8; 8];
            word[..chunk.len()].copy_from_slice(chunk);
            k = splitmix64(k ^ u64::from_le_bytes(word));
        }
        SeedTree { key: splitmix64(k) }
    }

    /// Derive the `i`-th indexed child (for per-sample / per-realization streams).
    pub fn index(&self, i: u64) -> Self {
        SeedTree {
            key: splitmix64(self.key ^ i.wrapping_mul(0xa24b_aed4_963e_e407)),
        }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Instantiate the stream as a concrete RNG.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut seed = [0u8; 32];
        let mut k = self.key;
        for word in seed.chunks_mut(8) {
            k = splitmix64(k);
            word.copy_from_slice(&k.to_le_bytes());
        }
        ChaCha12Rng::from_seed(seed)
    }
}
