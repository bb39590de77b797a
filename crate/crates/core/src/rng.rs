//! Seed derivation. Every random stream is a ChaCha8 generator keyed by a
//! base seed and a string salt, so independent consumers never share draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives a child seed from `seed`, a salt, and an index.
pub fn derive_seed(seed: u64, salt: &str, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ fnv1a(salt.as_bytes())).wrapping_add(splitmix64(index)))
}

pub fn stream(seed: u64, salt: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, salt, index))
}
