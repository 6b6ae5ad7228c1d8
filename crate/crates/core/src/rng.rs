//! Keyed random streams.
//!
//! Every random decision in the engine draws from a stream whose seed is a
//! pure function of a key (global seed, example id, replica, purpose). Work
//! can therefore be scheduled in any order, on any number of threads, and
//! still produce byte-identical output.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Method;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a. Stable across platforms and compiler versions, unlike
/// `std::hash::DefaultHasher`.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}

/// Folds a sequence of words into a single well-mixed seed.
pub fn mix_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0xA076_1D64_78BD_642F_u64, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Derives a child seed from a parent seed and a purpose label.
pub fn derive_seed(parent: u64, purpose: &str, index: u64) -> u64 {
    mix_seed(&[parent, fnv1a(purpose.as_bytes()), index])
}

/// Identity of an augmentation stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub global_seed: u64,
    pub example_id: u64,
    pub replica: u32,
    pub method: Method,
}

impl StreamKey {
    pub fn seed(&self) -> u64 {
        mix_seed(&[
            self.global_seed,
            self.example_id,
            u64::from(self.replica),
            fnv1a(self.method.as_str().as_bytes()),
        ])
    }
}

/// A deterministic random stream. Identical keys yield identical sequences.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(key: StreamKey) -> Self {
        Self::from_seed(key.seed())
    }

    pub fn from_seed(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Child stream for a named sub-purpose.
    pub fn derive(seed: u64, purpose: &str, index: u64) -> Self {
        Self::from_seed(derive_seed(seed, purpose, index))
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
