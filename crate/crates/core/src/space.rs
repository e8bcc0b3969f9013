//! Belief-space analytics: PCA, keyword subsets, user embeddings and
//! group-polarization distances.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{BeliefKey, Corpus, Polarity, UserIdx};
use crate::encoder::{tokenize, Embedding, StatementVectors};
use crate::error::{Error, Result};
use crate::linalg::{dot, euclidean, norm, right_svd};
use crate::profile::{IssueStance, Party, Profiles};

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `q` orthonormal principal axes, each of length `d`.
    pub components: Vec<Vec<f64>>,
    /// Variance along each axis, descending.
    pub eigenvalues: Vec<f64>,
    /// Trace of the sample covariance.
    pub total_variance: f64,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn explained_ratio(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .map(|e| e / self.total_variance)
            .collect()
    }

    pub fn project(&self, vector: &[f64]) -> Result<Vec<f64>> {
        if vector.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: vector.len(),
            });
        }
        let centered: Vec<f64> = vector.iter().zip(&self.mean).map(|(v, m)| v - m).collect();
        Ok(self.components.iter().map(|c| dot(c, &centered)).collect())
    }
}

/// Top-`q` principal axes from the SVD of the mean-centered data matrix.
///
/// Each axis is sign-normalized so its largest-magnitude entry is positive.
pub fn fit_pca(vectors: &[Embedding], q: usize) -> Result<PcaModel> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::TooFewPoints { need: 2, got: n });
    }
    let d = vectors[0].len();
    if let Some(bad) = vectors.iter().find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.len(),
        });
    }
    if q == 0 || q > d {
        return Err(Error::InvalidArgument(format!(
            "component count must be in 1..={d}, got {q}"
        )));
    }
    let mut mean = vec![0.0; d];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let columns: Vec<Vec<f64>> = (0..d)
        .map(|j| vectors.iter().map(|v| v[j] - mean[j]).collect())
        .collect();
    let total_variance = columns.iter().map(|c| dot(c, c)).sum::<f64>() / (n - 1) as f64;
    let svd = right_svd(columns);
    let mut components = Vec::with_capacity(q);
    let mut eigenvalues = Vec::with_capacity(q);
    for (s, mut axis) in svd.singular_values.into_iter().zip(svd.vectors).take(q) {
        let lead = axis
            .iter()
            .enumerate()
            .fold((0usize, 0.0f64), |best, (i, &x)| {
                if x.abs() > best.1 {
                    (i, x.abs())
                } else {
                    best
                }
            })
            .0;
        if axis[lead] < 0.0 {
            for x in &mut axis {
                *x = -*x;
            }
        }
        components.push(axis);
        eigenvalues.push(s * s / (n - 1) as f64);
    }
    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
        total_variance,
    })
}

/// Belief keys (both polarities) whose debate title contains any keyword
/// phrase as whole words, case-insensitively.
pub fn select_by_keywords<S: AsRef<str>>(corpus: &Corpus, keywords: &[S]) -> Vec<BeliefKey> {
    let phrases: Vec<Vec<String>> = keywords
        .iter()
        .map(|k| tokenize(k.as_ref()))
        .filter(|t| !t.is_empty())
        .collect();
    let mut out = Vec::new();
    for (i, debate) in corpus.debates().iter().enumerate() {
        let words = tokenize(&debate.title);
        let hit = phrases
            .iter()
            .any(|p| words.windows(p.len()).any(|w| w == p.as_slice()));
        if hit {
            let idx = crate::corpus::DebateIdx(i as u32);
            out.push(BeliefKey::new(idx, Polarity::Pro));
            out.push(BeliefKey::new(idx, Polarity::Con));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserEmbedding {
    pub user: UserIdx,
    pub vector: Embedding,
    /// Number of beliefs averaged.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserEmbeddings {
    pub embeddings: Vec<UserEmbedding>,
    /// Users with no vote inside the restriction.
    pub excluded: Vec<UserIdx>,
}

/// Mean belief vector of each user over their votes on debates where
/// `restrict` is true (all debates when `None`).
pub fn user_embeddings(
    vectors: &mut StatementVectors<'_>,
    corpus: &Corpus,
    users: &[UserIdx],
    restrict: Option<&[bool]>,
) -> Result<UserEmbeddings> {
    let d = vectors.model().dim();
    let mut embeddings = Vec::with_capacity(users.len());
    let mut excluded = Vec::new();
    for &user in users {
        let mut sum = vec![0.0; d];
        let mut support = 0usize;
        for v in corpus.user_votes(user) {
            if restrict.is_some_and(|r| !r[v.debate.get()]) {
                continue;
            }
            for (s, x) in sum.iter_mut().zip(vectors.get(v.key())?) {
                *s += x;
            }
            support += 1;
        }
        if support == 0 {
            excluded.push(user);
            continue;
        }
        for s in &mut sum {
            *s /= support as f64;
        }
        embeddings.push(UserEmbedding {
            user,
            vector: sum,
            support,
        });
    }
    Ok(UserEmbeddings {
        embeddings,
        excluded,
    })
}

pub fn centroid<'a>(vectors: impl IntoIterator<Item = &'a [f64]>) -> Option<Vec<f64>> {
    let mut it = vectors.into_iter();
    let first = it.next()?;
    let mut sum = first.to_vec();
    let mut n = 1usize;
    for v in it {
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
        n += 1;
    }
    for s in &mut sum {
        *s /= n as f64;
    }
    Some(sum)
}

/// `1 - cos(a, b)`.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((1.0 - dot(a, b) / (na * nb)).clamp(0.0, 2.0))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolarizationRecord {
    pub issue: String,
    pub euclid: f64,
    pub cosine: f64,
    pub n_pro: usize,
    pub n_con: usize,
}

/// Distance between the PRO and CON centroids of users' embeddings, grouping
/// users by their self-reported stance on `issue`.
pub fn polarization(
    embeddings: &[UserEmbedding],
    corpus: &Corpus,
    profiles: &Profiles,
    issue: &str,
) -> Result<PolarizationRecord> {
    let mut sides: [Vec<&[f64]>; 2] = [Vec::new(), Vec::new()];
    for e in embeddings {
        let stance = profiles
            .get(corpus.user_id(e.user))
            .and_then(|p| p.big_issues.get(issue));
        match stance {
            Some(IssueStance::Pro) => sides[0].push(&e.vector),
            Some(IssueStance::Con) => sides[1].push(&e.vector),
            _ => {}
        }
    }
    let (n_pro, n_con) = (sides[0].len(), sides[1].len());
    let [pro, con] = sides;
    let pro = centroid(pro).ok_or_else(|| Error::EmptyGroup(format!("{issue}: no PRO users")))?;
    let con = centroid(con).ok_or_else(|| Error::EmptyGroup(format!("{issue}: no CON users")))?;
    Ok(PolarizationRecord {
        issue: issue.into(),
        euclid: euclidean(&pro, &con),
        cosine: cosine_distance(&pro, &con)?,
        n_pro,
        n_con,
    })
}

/// All issues named in any profile, sorted.
pub fn issue_names(profiles: &Profiles) -> Vec<String> {
    let set: BTreeSet<&String> = profiles
        .values()
        .flat_map(|p| p.big_issues.keys())
        .collect();
    set.into_iter().cloned().collect()
}

/// `|ProRatio_A - ProRatio_B|` with `ProRatio = PRO / (PRO + CON)`; OTHER ignored.
pub fn pro_ratio_gap(
    profiles: &Profiles,
    issue: &str,
    party_a: &Party,
    party_b: &Party,
) -> Result<f64> {
    let ratio = |party: &Party| -> Result<f64> {
        let (mut pro, mut con) = (0usize, 0usize);
        for p in profiles
            .values()
            .filter(|p| p.party.as_ref() == Some(party))
        {
            match p.big_issues.get(issue) {
                Some(IssueStance::Pro) => pro += 1,
                Some(IssueStance::Con) => con += 1,
                _ => {}
            }
        }
        if pro + con == 0 {
            return Err(Error::EmptyGroup(format!(
                "{issue}: no PRO/CON respondents in {}",
                party.as_str()
            )));
        }
        Ok(pro as f64 / (pro + con) as f64)
    };
    Ok((ratio(party_a)? - ratio(party_b)?).abs())
}
