//! Seed derivation.
//!
//! Every random draw in the structure is keyed by a path of integers below the
//! master seed, e.g. `(seed, group, level, table, atom)` for a hash atom or
//! `(seed, group, level, point)` for a sampling decision. Keys are folded with
//! the SplitMix64 finalizer, and streams that need many values (projection
//! vectors) are ChaCha8 seeded from the derived key. Both are fully specified
//! integer algorithms, so results do not depend on platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags that keep unrelated draw families apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    LevelSample = 0x51,
    TailSample = 0x7A,
    HashAtom = 0xA7,
    Member = 0xE5,
    Trial = 0x7E,
    Dataset = 0xDA,
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a path of integers into a 64-bit key.
#[inline]
pub fn derive(master: u64, stream: Stream, path: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ (stream as u64).rotate_left(56));
    for &p in path {
        h = splitmix64(h ^ p);
    }
    h
}

/// Uniform in `[0, 1)` from a key, using the top 53 bits.
#[inline]
pub fn unit_f64(key: u64) -> f64 {
    (key >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Keyed Bernoulli trial.
#[inline]
pub fn bernoulli(key: u64, p: f64) -> bool {
    p >= 1.0 || unit_f64(key) < p
}

pub fn chacha(key: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(key)
}
