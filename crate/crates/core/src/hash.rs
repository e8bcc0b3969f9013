//! Seeded 64-bit hashing and named PRNG substreams.
//!
//! The hash is FNV-1a (64-bit) over the little-endian seed followed by the
//! payload, passed through the SplitMix64 finalizer. It is fixed so that hashed
//! feature buckets and derived seeds are identical on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// SplitMix64 output function.
pub fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy)]
pub struct SeededHasher {
    state: u64,
}

impl SeededHasher {
    pub fn new(seed: u64) -> Self {
        let mut h = Self { state: FNV_OFFSET };
        h.write(&seed.to_le_bytes());
        h
    }

    pub fn write(&mut self, bytes: &[u8]) -> &mut Self {
        for &b in bytes {
            self.state ^= u64::from(b);
            self.state = self.state.wrapping_mul(FNV_PRIME);
        }
        self
    }

    pub fn write_u64(&mut self, v: u64) -> &mut Self {
        self.write(&v.to_le_bytes())
    }

    pub fn finish(&self) -> u64 {
        finalize(self.state)
    }
}

pub fn hash_bytes(seed: u64, bytes: &[u8]) -> u64 {
    SeededHasher::new(seed).write(bytes).finish()
}

/// Seed for a named substream of `seed`.
pub fn stream_seed(seed: u64, label: &str) -> u64 {
    hash_bytes(seed, label.as_bytes())
}

pub fn stream(seed: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, label))
}

/// Seed keyed by a label and an extra integer (fold, epoch, ...).
pub fn indexed_seed(seed: u64, label: &str, index: u64) -> u64 {
    SeededHasher::new(seed)
        .write(label.as_bytes())
        .write_u64(index)
        .finish()
}

pub fn indexed_stream(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(indexed_seed(seed, label, index))
}
