//! Debates, votes, belief statements and debate-level fold splits.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::hash;

pub const PRO_TEMPLATE: &str = "I agree with the following: ";
pub const CON_TEMPLATE: &str = "I disagree with the following: ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
pub enum Polarity {
    Pro,
    Con,
}

impl Polarity {
    pub const BOTH: [Polarity; 2] = [Polarity::Pro, Polarity::Con];

    pub fn opposite(self) -> Self {
        match self {
            Polarity::Pro => Polarity::Con,
            Polarity::Con => Polarity::Pro,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Pro => "PRO",
            Polarity::Con => "CON",
        }
    }

    /// 0 for PRO, 1 for CON.
    pub fn index(self) -> usize {
        match self {
            Polarity::Pro => 0,
            Polarity::Con => 1,
        }
    }

    pub fn template(self) -> &'static str {
        match self {
            Polarity::Pro => PRO_TEMPLATE,
            Polarity::Con => CON_TEMPLATE,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A vote as read from input, before TIE rows are dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawPolarity {
    Pro,
    Con,
    Tie,
}

impl RawPolarity {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "PRO" => Some(RawPolarity::Pro),
            "CON" => Some(RawPolarity::Con),
            "TIE" => Some(RawPolarity::Tie),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DebateIdx(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UserIdx(pub u32);

impl DebateIdx {
    pub fn get(self) -> usize {
        self.0 as usize
    }
}

impl UserIdx {
    pub fn get(self) -> usize {
        self.0 as usize
    }
}

/// One stance on one debate. Keys are indices into the owning [`Corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BeliefKey {
    pub debate: DebateIdx,
    pub polarity: Polarity,
}

impl BeliefKey {
    pub fn new(debate: DebateIdx, polarity: Polarity) -> Self {
        Self { debate, polarity }
    }

    pub fn opposite(self) -> Self {
        Self {
            debate: self.debate,
            polarity: self.polarity.opposite(),
        }
    }

    /// Dense id: `2 * debate + polarity`.
    pub fn id(self) -> usize {
        self.debate.get() * 2 + self.polarity.index()
    }

    pub fn from_id(id: usize) -> Self {
        let polarity = if id.is_multiple_of(2) {
            Polarity::Pro
        } else {
            Polarity::Con
        };
        Self::new(DebateIdx((id / 2) as u32), polarity)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Debate {
    pub debate_id: String,
    pub title: String,
    pub category: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawVote {
    pub user_id: String,
    pub debate_id: String,
    pub polarity: RawPolarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Vote {
    pub user: UserIdx,
    pub debate: DebateIdx,
    pub polarity: Polarity,
}

impl Vote {
    pub fn key(&self) -> BeliefKey {
        BeliefKey::new(self.debate, self.polarity)
    }
}

/// Counts reported by ingest.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IngestReport {
    pub debates_read: usize,
    pub debates_excluded: usize,
    pub debates_kept: usize,
    pub votes_read: usize,
    pub tie_votes_dropped: usize,
    pub votes_on_excluded_dropped: usize,
    pub duplicate_votes_replaced: usize,
    pub votes_kept: usize,
    pub unique_users: usize,
}

/// Render the belief statement for a stance on `title`.
pub fn render_statement(title: &str, polarity: Polarity) -> Result<String> {
    if title.trim().is_empty() {
        return Err(Error::EmptyTitle);
    }
    let template = polarity.template();
    let mut out = String::with_capacity(template.len() + title.len());
    out.push_str(template);
    out.push_str(title);
    Ok(out)
}

/// Immutable debate/vote corpus.
///
/// Debates keep input order; users are interned in sorted `user_id` order and
/// votes are sorted by `(user, debate)` so the corpus does not depend on the
/// order votes were read in (beyond last-write-wins on duplicates).
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    debates: Vec<Debate>,
    users: Vec<String>,
    votes: Vec<Vote>,
    user_offsets: Vec<usize>,
    debate_lookup: BTreeMap<String, DebateIdx>,
}

impl Corpus {
    /// Build a corpus from parsed records.
    ///
    /// Debates listed in `excluded` are removed along with their votes; TIE
    /// votes are dropped; a repeated `(user, debate)` keeps the last vote.
    pub fn from_records(
        debates: Vec<Debate>,
        votes: impl IntoIterator<Item = RawVote>,
        excluded: &BTreeSet<String>,
    ) -> Result<(Self, IngestReport)> {
        let mut report = IngestReport {
            debates_read: debates.len(),
            ..IngestReport::default()
        };
        let mut all_ids = BTreeSet::new();
        let mut kept = Vec::with_capacity(debates.len());
        for d in debates {
            if d.title.trim().is_empty() {
                return Err(Error::EmptyTitle);
            }
            if !all_ids.insert(d.debate_id.clone()) {
                return Err(Error::DuplicateDebate(d.debate_id));
            }
            if excluded.contains(&d.debate_id) {
                report.debates_excluded += 1;
            } else {
                kept.push(d);
            }
        }
        let debate_lookup: BTreeMap<String, DebateIdx> = kept
            .iter()
            .enumerate()
            .map(|(i, d)| (d.debate_id.clone(), DebateIdx(i as u32)))
            .collect();

        let mut unknown = BTreeSet::new();
        // (user_id, debate) -> polarity, last write wins.
        let mut latest: BTreeMap<(String, DebateIdx), Polarity> = BTreeMap::new();
        for v in votes {
            report.votes_read += 1;
            let polarity = match v.polarity {
                RawPolarity::Pro => Polarity::Pro,
                RawPolarity::Con => Polarity::Con,
                RawPolarity::Tie => {
                    report.tie_votes_dropped += 1;
                    continue;
                }
            };
            let Some(&debate) = debate_lookup.get(&v.debate_id) else {
                if all_ids.contains(&v.debate_id) {
                    report.votes_on_excluded_dropped += 1;
                } else {
                    unknown.insert(v.debate_id);
                }
                continue;
            };
            if latest.insert((v.user_id, debate), polarity).is_some() {
                report.duplicate_votes_replaced += 1;
            }
        }
        if !unknown.is_empty() {
            return Err(Error::UnknownDebates(unknown.into_iter().collect()));
        }

        let mut users: Vec<String> = Vec::new();
        let mut votes = Vec::with_capacity(latest.len());
        for ((user_id, debate), polarity) in latest {
            if users.last() != Some(&user_id) {
                users.push(user_id);
            }
            votes.push(Vote {
                user: UserIdx((users.len() - 1) as u32),
                debate,
                polarity,
            });
        }
        report.debates_kept = kept.len();
        report.votes_kept = votes.len();
        report.unique_users = users.len();
        Ok((Self::assemble(kept, users, votes), report))
    }

    fn assemble(debates: Vec<Debate>, users: Vec<String>, mut votes: Vec<Vote>) -> Self {
        votes.sort_unstable();
        let mut user_offsets = Vec::with_capacity(users.len() + 1);
        let mut i = 0;
        for u in 0..users.len() {
            user_offsets.push(i);
            while i < votes.len() && votes[i].user.get() == u {
                i += 1;
            }
        }
        user_offsets.push(votes.len());
        let debate_lookup = debates
            .iter()
            .enumerate()
            .map(|(i, d)| (d.debate_id.clone(), DebateIdx(i as u32)))
            .collect();
        Self {
            debates,
            users,
            votes,
            user_offsets,
            debate_lookup,
        }
    }

    pub fn debates(&self) -> &[Debate] {
        &self.debates
    }

    pub fn debate(&self, idx: DebateIdx) -> &Debate {
        &self.debates[idx.get()]
    }

    pub fn debate_idx(&self, debate_id: &str) -> Option<DebateIdx> {
        self.debate_lookup.get(debate_id).copied()
    }

    pub fn n_debates(&self) -> usize {
        self.debates.len()
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn user_id(&self, user: UserIdx) -> &str {
        &self.users[user.get()]
    }

    pub fn user_idx(&self, user_id: &str) -> Option<UserIdx> {
        self.users
            .binary_search_by(|u| u.as_str().cmp(user_id))
            .ok()
            .map(|i| UserIdx(i as u32))
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    /// All votes, sorted by `(user, debate)`.
    pub fn votes(&self) -> &[Vote] {
        &self.votes
    }

    pub fn user_votes(&self, user: UserIdx) -> &[Vote] {
        let u = user.get();
        &self.votes[self.user_offsets[u]..self.user_offsets[u + 1]]
    }

    pub fn statement(&self, key: BeliefKey) -> String {
        // Titles are validated non-empty at construction.
        render_statement(&self.debate(key.debate).title, key.polarity)
            .unwrap_or_else(|_| unreachable!("corpus titles are non-empty"))
    }

    pub fn key_label(&self, key: BeliefKey) -> String {
        format!("{}:{}", self.debate(key.debate).debate_id, key.polarity)
    }

    /// Same debate and user tables, only the votes on debates where `keep` is true.
    pub fn restrict(&self, keep: &[bool]) -> Corpus {
        let votes: Vec<Vote> = self
            .votes
            .iter()
            .filter(|v| keep[v.debate.get()])
            .copied()
            .collect();
        Self::assemble(self.debates.clone(), self.users.clone(), votes)
    }

    /// Number of votes per polarity, indexed by [`Polarity::index`].
    pub fn polarity_counts(&self) -> [usize; 2] {
        let mut c = [0usize; 2];
        for v in &self.votes {
            c[v.polarity.index()] += 1;
        }
        c
    }

    /// The more frequent polarity; PRO on a tie.
    pub fn majority_polarity(&self) -> Polarity {
        let [pro, con] = self.polarity_counts();
        if con > pro {
            Polarity::Con
        } else {
            Polarity::Pro
        }
    }

    /// Belief keys with at least one vote, in key order.
    pub fn held_keys(&self) -> Vec<BeliefKey> {
        let mut held = alloc::vec![false; self.debates.len() * 2];
        for v in &self.votes {
            held[v.key().id()] = true;
        }
        held.iter()
            .enumerate()
            .filter(|(_, &h)| h)
            .map(|(id, _)| BeliefKey::from_id(id))
            .collect()
    }

    /// Votes as `(user_id, debate_id, polarity)` rows in canonical order.
    pub fn vote_rows(&self) -> impl Iterator<Item = (&str, &str, Polarity)> + '_ {
        self.votes.iter().map(move |v| {
            (
                self.users[v.user.get()].as_str(),
                self.debates[v.debate.get()].debate_id.as_str(),
                v.polarity,
            )
        })
    }
}

/// One fold of a debate-level K-fold split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub fold_index: usize,
    pub train_debates: Vec<DebateIdx>,
    pub test_debates: Vec<DebateIdx>,
    /// Users with at least one train vote and at least one test vote.
    pub evaluable_users: Vec<UserIdx>,
    in_test: Vec<bool>,
}

impl FoldSplit {
    pub fn is_test(&self, debate: DebateIdx) -> bool {
        self.in_test[debate.get()]
    }

    pub fn train_mask(&self) -> Vec<bool> {
        self.in_test.iter().map(|t| !t).collect()
    }

    pub fn test_mask(&self) -> Vec<bool> {
        self.in_test.clone()
    }

    /// Rebuild a split from explicit test debates (e.g. when reading one back).
    pub fn from_test_set(
        corpus: &Corpus,
        fold_index: usize,
        test: impl IntoIterator<Item = DebateIdx>,
    ) -> Self {
        let mut in_test = alloc::vec![false; corpus.n_debates()];
        for d in test {
            in_test[d.get()] = true;
        }
        let (mut train_debates, mut test_debates) = (Vec::new(), Vec::new());
        for (i, &t) in in_test.iter().enumerate() {
            if t {
                test_debates.push(DebateIdx(i as u32));
            } else {
                train_debates.push(DebateIdx(i as u32));
            }
        }
        let evaluable_users = (0..corpus.n_users())
            .map(|u| UserIdx(u as u32))
            .filter(|&u| {
                let votes = corpus.user_votes(u);
                votes.iter().any(|v| in_test[v.debate.get()])
                    && votes.iter().any(|v| !in_test[v.debate.get()])
            })
            .collect();
        Self {
            fold_index,
            train_debates,
            test_debates,
            evaluable_users,
            in_test,
        }
    }
}

/// Shuffle debates with the `folds` substream of `seed` and cut the order into
/// `k` contiguous blocks; block `i` is the test set of fold `i`.
pub fn make_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "fold count must be >= 2, got {k}"
        )));
    }
    let n = corpus.n_debates();
    if n == 0 {
        return Err(Error::EmptyCorpus);
    }
    if k > n {
        return Err(Error::TooManyFolds { k, debates: n });
    }
    let mut order: Vec<DebateIdx> = (0..n as u32).map(DebateIdx).collect();
    order.shuffle(&mut hash::stream(seed, "folds"));
    let (base, extra) = (n / k, n % k);
    let mut start = 0;
    let mut folds = Vec::with_capacity(k);
    for i in 0..k {
        let len = base + usize::from(i < extra);
        let block = order[start..start + len].iter().copied();
        folds.push(FoldSplit::from_test_set(corpus, i, block));
        start += len;
    }
    Ok(folds)
}

impl fmt::Display for BeliefKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}:{}", self.debate.0, self.polarity)
    }
}
