//! Named seed derivation.
//!
//! Every random stream in the pipeline is derived from one root seed plus a
//! path of names and indices, e.g. `derive(root, &["cv", "fold"], &[3])`.
//! No component draws from a global generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// Derive a child seed from `root`, a list of component names and a list of indices.
pub fn derive(root: u64, names: &[&str], indices: &[u64]) -> u64 {
    let mut state = splitmix64(root);
    for name in names {
        state = splitmix64(state ^ fnv1a(name.as_bytes()));
    }
    for &i in indices {
        state = splitmix64(state ^ splitmix64(i.wrapping_add(0x5851_f42d_4c95_7f2d)));
    }
    state
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
