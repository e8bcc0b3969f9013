//! Hashed word unigram + bigram features.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::hash::SeededHasher;

const UNIGRAM_TAG: u8 = 1;
const BIGRAM_TAG: u8 = 2;

/// How text is turned into a sparse feature vector.
///
/// Tokens are maximal runs of alphanumeric characters after lowercasing. Each
/// unigram and each adjacent-token bigram is hashed (domain-separated) with
/// `hash_seed` into `buckets` slots; the count vector is L2-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureSpec {
    pub buckets: u32,
    pub hash_seed: u64,
}

impl FeatureSpec {
    pub const DEFAULT_BUCKETS: u32 = 1 << 18;
    pub const DEFAULT_HASH_SEED: u64 = 0x5eed_b1f5;

    pub fn new(buckets: u32, hash_seed: u64) -> Self {
        Self { buckets, hash_seed }
    }

    fn bucket(&self, tag: u8, parts: &[&str]) -> u32 {
        let mut h = SeededHasher::new(self.hash_seed);
        h.write(&[tag]);
        for (i, p) in parts.iter().enumerate() {
            if i > 0 {
                h.write(&[0x1f]);
            }
            h.write(p.as_bytes());
        }
        (h.finish() % u64::from(self.buckets)) as u32
    }
}

impl Default for FeatureSpec {
    fn default() -> Self {
        Self::new(Self::DEFAULT_BUCKETS, Self::DEFAULT_HASH_SEED)
    }
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseFeatures {
    pub entries: Vec<(u32, f64)>,
}

impl SparseFeatures {
    pub fn norm(&self) -> f64 {
        libm::sqrt(self.entries.iter().map(|(_, v)| v * v).sum())
    }

    pub fn indices(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|&(i, _)| i)
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

pub fn featurize(text: &str, spec: &FeatureSpec) -> Result<SparseFeatures> {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(Error::EmptyText);
    }
    let mut raw: Vec<u32> = Vec::with_capacity(tokens.len() * 2);
    for t in &tokens {
        raw.push(spec.bucket(UNIGRAM_TAG, &[t]));
    }
    for w in tokens.windows(2) {
        raw.push(spec.bucket(BIGRAM_TAG, &[&w[0], &w[1]]));
    }
    raw.sort_unstable();
    let mut entries: Vec<(u32, f64)> = Vec::new();
    for b in raw {
        match entries.last_mut() {
            Some((i, c)) if *i == b => *c += 1.0,
            _ => entries.push((b, 1.0)),
        }
    }
    let norm = libm::sqrt(entries.iter().map(|(_, c)| c * c).sum());
    for (_, c) in &mut entries {
        *c /= norm;
    }
    Ok(SparseFeatures { entries })
}
