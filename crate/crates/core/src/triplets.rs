//! Vote co-occurrence table and anchor/positive/negative triplet sampling.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{BeliefKey, Corpus};
use crate::hash::SeededHasher;

/// Symmetric counts of users holding both of two beliefs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoocTable {
    /// Indexed by key id; neighbor key id -> count.
    adjacency: Vec<BTreeMap<u32, u32>>,
}

impl CoocTable {
    pub fn build(corpus: &Corpus) -> Self {
        let mut adjacency = vec![BTreeMap::new(); corpus.n_debates() * 2];
        for u in 0..corpus.n_users() {
            let votes = corpus.user_votes(crate::corpus::UserIdx(u as u32));
            for (i, a) in votes.iter().enumerate() {
                for b in &votes[i + 1..] {
                    let (ka, kb) = (a.key().id(), b.key().id());
                    *adjacency[ka].entry(kb as u32).or_insert(0) += 1;
                    *adjacency[kb].entry(ka as u32).or_insert(0) += 1;
                }
            }
        }
        Self { adjacency }
    }

    pub fn count(&self, a: BeliefKey, b: BeliefKey) -> u32 {
        self.adjacency
            .get(a.id())
            .and_then(|m| m.get(&(b.id() as u32)))
            .copied()
            .unwrap_or(0)
    }

    /// Co-occurring beliefs of `key` with their counts, in key order.
    pub fn neighbors(&self, key: BeliefKey) -> impl Iterator<Item = (BeliefKey, u32)> + '_ {
        self.adjacency
            .get(key.id())
            .into_iter()
            .flat_map(|m| m.iter().map(|(&k, &c)| (BeliefKey::from_id(k as usize), c)))
    }

    /// Number of unordered pairs with a non-zero count.
    pub fn n_pairs(&self) -> usize {
        self.adjacency.iter().map(BTreeMap::len).sum::<usize>() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.iter().all(BTreeMap::is_empty)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triplet {
    pub anchor: BeliefKey,
    pub positive: BeliefKey,
    pub negative: BeliefKey,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SamplingConfig {
    pub max_pos: usize,
    pub max_neg: usize,
    /// Always use the anchor's opposite as one negative when it has votes.
    pub force_opposite: bool,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            max_pos: 5,
            max_neg: 5,
            force_opposite: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SkipReport {
    pub anchors_considered: usize,
    pub anchors_used: usize,
    pub skipped_no_positive: usize,
    pub skipped_no_negative: usize,
}

#[derive(Debug, Clone)]
pub struct Sampled {
    pub triplets: Vec<Triplet>,
    pub report: SkipReport,
}

/// Per-anchor PRNG derived from the seed and the anchor's debate id and polarity,
/// so the sample for one anchor does not depend on which other anchors exist.
fn anchor_rng(seed: u64, corpus: &Corpus, anchor: BeliefKey) -> ChaCha8Rng {
    let s = SeededHasher::new(seed)
        .write(b"triplets")
        .write(corpus.debate(anchor.debate).debate_id.as_bytes())
        .write(anchor.polarity.as_str().as_bytes())
        .finish();
    ChaCha8Rng::seed_from_u64(s)
}

/// Sequential weighted sampling without replacement.
pub fn weighted_without_replacement<T: Copy>(
    candidates: &[(T, f64)],
    k: usize,
    rng: &mut impl Rng,
) -> Vec<T> {
    let mut pool: Vec<(T, f64)> = candidates
        .iter()
        .copied()
        .filter(|&(_, w)| w > 0.0)
        .collect();
    let mut out = Vec::with_capacity(k.min(pool.len()));
    while out.len() < k && !pool.is_empty() {
        let total: f64 = pool.iter().map(|&(_, w)| w).sum();
        let mut r = rng.gen::<f64>() * total;
        let mut pick = pool.len() - 1;
        for (i, &(_, w)) in pool.iter().enumerate() {
            if r < w {
                pick = i;
                break;
            }
            r -= w;
        }
        out.push(pool.remove(pick).0);
    }
    out
}

/// Sample triplets for every held belief of `corpus` (normally a train-fold
/// restriction, with `cooc` built from the same restriction).
pub fn sample_triplets(
    cooc: &CoocTable,
    corpus: &Corpus,
    config: &SamplingConfig,
    seed: u64,
) -> Sampled {
    let mut holders = vec![0u32; corpus.n_debates() * 2];
    for v in corpus.votes() {
        holders[v.key().id()] += 1;
    }
    let mut report = SkipReport::default();
    let mut triplets = Vec::new();
    for anchor in corpus.held_keys() {
        report.anchors_considered += 1;
        let mut rng = anchor_rng(seed, corpus, anchor);

        let pos_candidates: Vec<(BeliefKey, f64)> = cooc
            .neighbors(anchor)
            .map(|(k, c)| (k, f64::from(c)))
            .collect();
        let positives = weighted_without_replacement(&pos_candidates, config.max_pos, &mut rng);
        if positives.is_empty() {
            report.skipped_no_positive += 1;
            continue;
        }

        let opposite = anchor.opposite();
        let opposite_held = holders[opposite.id()] > 0;
        let mut neg_candidates: Vec<(BeliefKey, f64)> = cooc
            .neighbors(opposite)
            .filter(|(k, _)| *k != anchor && !positives.contains(k))
            .map(|(k, c)| (k, f64::from(c)))
            .collect();
        let mut negatives = Vec::with_capacity(config.max_neg);
        if config.force_opposite {
            if opposite_held && config.max_neg > 0 {
                negatives.push(opposite);
            }
            negatives.extend(weighted_without_replacement(
                &neg_candidates,
                config.max_neg.saturating_sub(negatives.len()),
                &mut rng,
            ));
        } else {
            if opposite_held {
                neg_candidates.insert(0, (opposite, f64::from(holders[opposite.id()])));
            }
            negatives = weighted_without_replacement(&neg_candidates, config.max_neg, &mut rng);
        }
        if negatives.is_empty() {
            report.skipped_no_negative += 1;
            continue;
        }

        report.anchors_used += 1;
        for &positive in &positives {
            for &negative in &negatives {
                triplets.push(Triplet {
                    anchor,
                    positive,
                    negative,
                });
            }
        }
    }
    Sampled { triplets, report }
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TripletStats {
    pub triplets: usize,
    pub anchors: usize,
    pub max_per_anchor: usize,
    pub mean_per_anchor: f64,
    /// Triplet count by the anchor debate's category.
    pub per_category: BTreeMap<String, usize>,
    /// Fraction of triplets whose negative is the anchor's direct opposite.
    pub opposite_fraction: f64,
}

pub const UNCATEGORIZED: &str = "uncategorized";

pub fn triplet_stats(triplets: &[Triplet], corpus: &Corpus) -> TripletStats {
    if triplets.is_empty() {
        return TripletStats::default();
    }
    let mut per_anchor: BTreeMap<BeliefKey, usize> = BTreeMap::new();
    let mut per_category: BTreeMap<String, usize> = BTreeMap::new();
    let mut opposite = 0usize;
    for t in triplets {
        *per_anchor.entry(t.anchor).or_insert(0) += 1;
        let cat = corpus
            .debate(t.anchor.debate)
            .category
            .as_deref()
            .unwrap_or(UNCATEGORIZED);
        *per_category.entry(cat.into()).or_insert(0) += 1;
        if t.negative == t.anchor.opposite() {
            opposite += 1;
        }
    }
    TripletStats {
        triplets: triplets.len(),
        anchors: per_anchor.len(),
        max_per_anchor: per_anchor.values().copied().max().unwrap_or(0),
        mean_per_anchor: triplets.len() as f64 / per_anchor.len() as f64,
        per_category,
        opposite_fraction: opposite as f64 / triplets.len() as f64,
    }
}
