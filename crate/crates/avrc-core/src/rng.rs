//! Deterministic random-stream derivation.
//!
//! Every random draw in this crate comes from a ChaCha8 generator
//! (`rand_chacha` 0.9, pinned) keyed by `(seed, index, role)`. The 32-byte
//! ChaCha key is laid out as four little-endian `u64` words:
//! `[seed, index, role, DOMAIN_TAG]`. `index` is a model id, replicate
//! number or zero for collection-level streams. This layout is part of the
//! crate's reproducibility contract: identical `(seed, index, role)` always
//! yields the identical byte stream on every platform, and distinct keys
//! yield independent streams regardless of scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Version tag mixed into every stream key.
const DOMAIN_TAG: u64 = 0x6176_7263_0000_0001; // "avrc", stream layout v1

/// Purpose of a derived stream. Discriminants are stable and part of the
/// reproducibility contract; never reorder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Role {
    TrainDesign = 1,
    TrainLatent = 2,
    Coefficients = 3,
    LatentCoefficients = 4,
    TrainError = 5,
    TestDesign = 6,
    TestLatent = 7,
    TestError = 8,
    TheoryDesign = 9,
    TheoryTheta = 10,
    ReplicateError = 11,
    ReplicateTestError = 12,
    ReplicateLatent = 13,
    BiasCheck = 14,
    Generic = 15,
}

/// Derive the generator for `(seed, index, role)`.
pub fn stream(seed: u64, index: u64, role: Role) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    key[16..24].copy_from_slice(&(role as u64).to_le_bytes());
    key[24..32].copy_from_slice(&DOMAIN_TAG.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Stable per-replicate seed derivation (SplitMix64 of seed and replicate).
///
/// Replicate `r` of a run seeded with `s` behaves exactly like an
/// independent run seeded with `replicate_seed(s, r)`.
pub fn replicate_seed(seed: u64, replicate: u64) -> u64 {
    splitmix64(seed ^ splitmix64(replicate.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = stream(7, 3, Role::TrainDesign);
        let mut b = stream(7, 3, Role::TrainDesign);
        let mut c = stream(7, 4, Role::TrainDesign);
        let xs: Vec<f64> = (0..8).map(|_| a.random()).collect();
        let ys: Vec<f64> = (0..8).map(|_| b.random()).collect();
        let zs: Vec<f64> = (0..8).map(|_| c.random()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
    }

    #[test]
    fn replicate_seeds_differ() {
        let s0 = replicate_seed(42, 0);
        let s1 = replicate_seed(42, 1);
        assert_ne!(s0, s1);
        assert_eq!(s0, replicate_seed(42, 0));
    }
}
