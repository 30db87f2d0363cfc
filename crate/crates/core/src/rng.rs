//! Hierarchical seed derivation.
//!
//! A run owns a single root seed; every sampling site derives its own
//! generator by walking a path of child indices (run → player → thread →
//! day). Two sites with different paths get statistically independent
//! streams, and adding parallelism never reorders draws because no
//! generator is ever shared.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// A node in the seed-derivation tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    state: u64,
}

// SplitMix64 finalizer; full-period avalanche mixing.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        SeedTree { state: mix(seed) }
    }

    /// Derive the child node at `index`.
    pub fn child(&self, index: u64) -> SeedTree {
        SeedTree {
            state: mix(self.state ^ mix(index.wrapping_add(0x517c_c1b7_2722_0a95))),
        }
    }

    /// Instantiate a generator at this node.
    pub fn rng(&self) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(self.state)
    }
}
