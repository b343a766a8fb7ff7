//! Counter-based seed derivation.
//!
//! A grid cell seed is derived from the base seed and the cell coordinates, and
//! per-tree or per-epoch seeds are derived from the cell seed the same way. The
//! result only depends on the path of labels, never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `parent` and a path of labels.
pub fn derive(parent: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(parent.wrapping_add(GOLDEN)), |acc, &label| {
        mix(acc ^ mix(label.wrapping_add(GOLDEN).wrapping_mul(GOLDEN)))
    })
}

/// Deterministic generator for a derived seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
