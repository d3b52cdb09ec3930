//! Seed derivation. Every random consumer gets its own ChaCha8 stream,
//! seeded from the root seed through splitmix64, so extra draws in one
//! stream never shift another.

use serde::{Deserialize, Serialize};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed `index` of `parent`.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

const TAG_ENV: u64 = 1;
const TAG_FADING: u64 = 2;
const TAG_INIT: u64 = 3;
const TAG_MINIBATCH: u64 = 4;
const TAG_PRETRAIN: u64 = 5;

/// Seeds of the independent streams used by a run.
///
/// * `env`: building heights.
/// * `fading`: small-scale fading; slot `t` uses `derive_seed(fading, t)`.
/// * `init`: network weights; unit `i` uses `derive_seed(init, i)`.
/// * `minibatch`: replay sampling; unit `i`, step `n` uses
///   `derive_seed(derive_seed(minibatch, i), n)`.
/// * `pretrain`: positions and fading of the pre-training episodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedStreams {
    pub env: u64,
    pub fading: u64,
    pub init: u64,
    pub minibatch: u64,
    pub pretrain: u64,
}

impl SeedStreams {
    pub fn from_root(root: u64) -> Self {
        SeedStreams {
            env: derive_seed(root, TAG_ENV),
            fading: derive_seed(root, TAG_FADING),
            init: derive_seed(root, TAG_INIT),
            minibatch: derive_seed(root, TAG_MINIBATCH),
            pretrain: derive_seed(root, TAG_PRETRAIN),
        }
    }
}
