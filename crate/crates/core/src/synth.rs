//! Synthetic vote corpora with planted community structure.
//!
//! Communities sit at evenly spaced ideal points `x_c` in `[-1, 1]` and every
//! debate gets a threshold `tau ~ U(-1, 1)`. A community's planted polarity on
//! a debate is PRO iff `x_c > tau`. Users vote their community's polarity with
//! probability `p`. A fraction `eta` of users are noise users who vote by fair
//! coin.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::corpus::{Corpus, Debate, Polarity, RawPolarity, RawVote};
use crate::error::{Error, Result};
use crate::hash;
use crate::profile::{IssueStance, Party, Profiles, Religion, UserProfile};

const CATEGORIES: [&str; 8] = [
    "religion",
    "politics",
    "economy",
    "society",
    "science",
    "education",
    "health",
    "sports",
];
const LEVELS: [&str; 5] = [
    "radical",
    "progressive",
    "moderate",
    "traditional",
    "conservative",
];
const FILLER: [&str; 12] = [
    "policy",
    "should",
    "be",
    "the",
    "government",
    "people",
    "rights",
    "law",
    "public",
    "new",
    "ban",
    "allow",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_debates: usize,
    pub n_communities: usize,
    /// Per-vote probability of following the community polarity.
    pub alignment: f64,
    /// Probability that a user is a fair-coin noise user.
    pub noise: f64,
    /// Probability that a user votes on a given debate.
    pub participation: f64,
    pub n_categories: usize,
    /// Planted big issues; issue `i` has strength `(i + 1) / n_issues`.
    pub n_issues: usize,
    /// Optional per-category override of `alignment`.
    pub category_alignment: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_users: 200,
            n_debates: 60,
            n_communities: 2,
            alignment: 0.95,
            noise: 0.05,
            participation: 0.3,
            n_categories: 4,
            n_issues: 6,
            category_alignment: None,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        let valid_p = |p: f64| (0.5..=1.0).contains(&p);
        if !valid_p(self.alignment) {
            return bad(format!(
                "alignment p must lie in [0.5, 1], got {}",
                self.alignment
            ));
        }
        if !(0.0..0.5).contains(&self.noise) {
            return bad(format!(
                "noise eta must lie in [0, 0.5), got {}",
                self.noise
            ));
        }
        if !(self.participation > 0.0 && self.participation <= 1.0) {
            return bad(format!(
                "participation must lie in (0, 1], got {}",
                self.participation
            ));
        }
        if self.n_users == 0 || self.n_debates == 0 || self.n_communities == 0 {
            return bad("users, debates and communities must be positive".into());
        }
        if self.n_categories == 0 || self.n_categories > CATEGORIES.len() {
            return bad(format!("categories must lie in 1..={}", CATEGORIES.len()));
        }
        if let Some(per) = &self.category_alignment {
            if per.len() != self.n_categories || !per.iter().all(|&p| valid_p(p)) {
                return bad("category alignment needs one value in [0.5, 1] per category".into());
            }
        }
        Ok(())
    }
}

/// Ground truth behind a synthetic corpus. Users are indexed in corpus order.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedLabels {
    pub ideal_points: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub community: Vec<usize>,
    pub noisy: Vec<bool>,
    /// `planted[c][j]`: polarity of community `c` on debate `j`.
    pub planted: Vec<Vec<Polarity>>,
    /// Debates on which at least two communities disagree.
    pub aligned: Vec<bool>,
    pub issue_strengths: BTreeMap<String, f64>,
}

impl PlantedLabels {
    pub fn user_polarity(&self, user: usize, debate: usize) -> Polarity {
        self.planted[self.community[user]][debate]
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub corpus: Corpus,
    pub profiles: Profiles,
    pub labels: PlantedLabels,
}

pub fn category_name(i: usize) -> &'static str {
    CATEGORIES[i % CATEGORIES.len()]
}

pub fn issue_name(i: usize) -> String {
    format!("issue{:02}", i + 1)
}

pub fn generate_synthetic(config: &SynthConfig) -> Result<Synthetic> {
    config.validate()?;
    let c = config.n_communities;
    let ideal_points: Vec<f64> = if c == 1 {
        alloc::vec![0.0]
    } else {
        (0..c)
            .map(|i| -1.0 + 2.0 * i as f64 / (c - 1) as f64)
            .collect()
    };

    let mut rng = hash::stream(config.seed, "synth-debates");
    let thresholds: Vec<f64> = (0..config.n_debates)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let planted: Vec<Vec<Polarity>> = ideal_points
        .iter()
        .map(|&x| {
            thresholds
                .iter()
                .map(|&t| if x > t { Polarity::Pro } else { Polarity::Con })
                .collect()
        })
        .collect();
    let aligned: Vec<bool> = (0..config.n_debates)
        .map(|j| planted.iter().any(|row| row[j] != planted[0][j]))
        .collect();

    let width = digits(config.n_debates);
    let debates: Vec<Debate> = thresholds
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let cat = j % config.n_categories;
            let level = (((t + 1.0) / 2.0 * LEVELS.len() as f64) as usize).min(LEVELS.len() - 1);
            let f1 = FILLER[rng.gen_range(0..FILLER.len())];
            let f2 = FILLER[rng.gen_range(0..FILLER.len())];
            Debate {
                debate_id: format!("d{j:0width$}"),
                title: format!("{} {} {f1} {f2} d{j}", category_name(cat), LEVELS[level]),
                category: Some(category_name(cat).into()),
            }
        })
        .collect();

    let user_width = digits(config.n_users);
    let user_ids: Vec<String> = (0..config.n_users)
        .map(|i| format!("u{i:0user_width$}"))
        .collect();
    let community: Vec<usize> = (0..config.n_users).map(|i| i % c).collect();
    let mut rng = hash::stream(config.seed, "synth-users");
    let noisy: Vec<bool> = (0..config.n_users)
        .map(|_| rng.gen::<f64>() < config.noise)
        .collect();

    let mut rng = hash::stream(config.seed, "synth-votes");
    let mut votes = Vec::new();
    for (u, id) in user_ids.iter().enumerate() {
        let mut chosen: Vec<usize> = (0..config.n_debates)
            .filter(|_| rng.gen::<f64>() < config.participation)
            .collect();
        if chosen.is_empty() {
            chosen.push(rng.gen_range(0..config.n_debates));
        }
        for j in chosen {
            let polarity = if noisy[u] {
                if rng.gen::<bool>() {
                    Polarity::Pro
                } else {
                    Polarity::Con
                }
            } else {
                let p = config
                    .category_alignment
                    .as_ref()
                    .map_or(config.alignment, |per| per[j % config.n_categories]);
                let base = planted[community[u]][j];
                if rng.gen::<f64>() < p {
                    base
                } else {
                    base.opposite()
                }
            };
            votes.push(RawVote {
                user_id: id.clone(),
                debate_id: debates[j].debate_id.clone(),
                polarity: match polarity {
                    Polarity::Pro => RawPolarity::Pro,
                    Polarity::Con => RawPolarity::Con,
                },
            });
        }
    }
    let (corpus, _) = Corpus::from_records(debates, votes, &BTreeSet::new())?;

    let issue_strengths: BTreeMap<String, f64> = (0..config.n_issues)
        .map(|i| (issue_name(i), (i + 1) as f64 / config.n_issues as f64))
        .collect();
    let mut rng = hash::stream(config.seed, "synth-profiles");
    let mut profiles = Profiles::new();
    for (u, id) in user_ids.iter().enumerate() {
        let x = ideal_points[community[u]];
        let (party, religion) = if x < 0.0 {
            (Party::Democratic, Religion::Atheist)
        } else if x > 0.0 {
            (Party::Republican, Religion::Christian)
        } else {
            (Party::Independent, Religion::Agnostic)
        };
        let mut big_issues = BTreeMap::new();
        for (name, &s) in &issue_strengths {
            let stance = if rng.gen::<f64>() < 0.1 {
                IssueStance::Other
            } else if rng.gen::<f64>() < (1.0 + s * x) / 2.0 {
                IssueStance::Pro
            } else {
                IssueStance::Con
            };
            big_issues.insert(name.clone(), stance);
        }
        profiles.insert(
            id.clone(),
            UserProfile {
                user_id: id.clone(),
                party: Some(party),
                religion: Some(religion),
                big_issues,
            },
        );
    }

    Ok(Synthetic {
        corpus,
        profiles,
        labels: PlantedLabels {
            ideal_points,
            thresholds,
            community,
            noisy,
            planted,
            aligned,
            issue_strengths,
        },
    })
}

/// Decimal width of the largest index below `n`.
fn digits(n: usize) -> usize {
    let mut n = n.saturating_sub(1);
    let mut w = 1;
    while n >= 10 {
        n /= 10;
        w += 1;
    }
    w
}
