//! Nearest-belief stance prediction, baselines and classification metrics.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::corpus::{render_statement, Corpus, DebateIdx, FoldSplit, Polarity, UserIdx};
use crate::dissonance;
use crate::encoder::{EncoderModel, StatementVectors};
use crate::error::{Error, Result};
use crate::hash;
use crate::linalg::euclidean;
use crate::space::{user_embeddings, UserEmbedding};
use crate::stats;
use crate::triplets::UNCATEGORIZED;

/// Distances from a user to the two candidate statements of one debate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StanceCall {
    pub d_min: f64,
    pub d_max: f64,
    pub d_avg: f64,
    pub predicted: Polarity,
    /// `d_min == d_max`; `predicted` then falls back to the tie polarity.
    pub tie: bool,
}

pub fn nearest_stance(
    user: &[f64],
    pro: &[f64],
    con: &[f64],
    tie_polarity: Polarity,
) -> Result<StanceCall> {
    crate::encoder::check_dim(user.len(), pro.len())?;
    crate::encoder::check_dim(user.len(), con.len())?;
    let (dp, dc) = (euclidean(user, pro), euclidean(user, con));
    let (d_min, d_max) = if dp <= dc { (dp, dc) } else { (dc, dp) };
    let tie = dp == dc;
    let predicted = if tie {
        tie_polarity
    } else if dp < dc {
        Polarity::Pro
    } else {
        Polarity::Con
    };
    Ok(StanceCall {
        d_min,
        d_max,
        d_avg: (d_min + d_max) / 2.0,
        predicted,
        tie,
    })
}

/// Encode both templated statements of `title` and pick the nearer one.
pub fn predict_stance(
    model: &EncoderModel,
    user: &[f64],
    title: &str,
    tie_polarity: Polarity,
) -> Result<StanceCall> {
    let pro = model.encode(&render_statement(title, Polarity::Pro)?)?;
    let con = model.encode(&render_statement(title, Polarity::Con)?)?;
    nearest_stance(user, &pro, &con, tie_polarity)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionOutcome {
    pub user_id: String,
    pub debate_id: String,
    pub category: Option<String>,
    /// Number of the user's train votes (history length L).
    pub history: usize,
    pub d_min: f64,
    pub d_max: f64,
    pub d_avg: f64,
    pub predicted: Polarity,
    pub truth: Polarity,
    pub correct: bool,
    pub tie: bool,
}

impl PredictionOutcome {
    /// Relative dissonance, `None` when `d_min == 0`.
    pub fn d_star(&self) -> Option<f64> {
        dissonance::d_star(self.d_min, self.d_max).ok().flatten()
    }

    pub fn category_or_default(&self) -> &str {
        self.category.as_deref().unwrap_or(UNCATEGORIZED)
    }
}

#[derive(Debug, Clone)]
pub struct FoldOutcomes {
    pub outcomes: Vec<PredictionOutcome>,
    /// Users with test votes but no train votes.
    pub skipped_users: Vec<UserIdx>,
    pub user_embeddings: Vec<UserEmbedding>,
    /// Every debate whose statement entered some user embedding.
    pub embedding_debates: BTreeSet<DebateIdx>,
    pub train_majority: Polarity,
}

/// One outcome per (evaluable user, test vote), ordered by user then debate.
pub fn run_fold(model: &EncoderModel, corpus: &Corpus, fold: &FoldSplit) -> Result<FoldOutcomes> {
    let train_mask = fold.train_mask();
    let train = corpus.restrict(&train_mask);
    let train_majority = train.majority_polarity();
    let candidates: Vec<UserIdx> = (0..corpus.n_users() as u32)
        .map(UserIdx)
        .filter(|&u| corpus.user_votes(u).iter().any(|v| fold.is_test(v.debate)))
        .collect();

    let mut vectors = StatementVectors::new(model, corpus);
    let embedded = user_embeddings(&mut vectors, &train, &candidates, None)?;
    let mut embedding_debates = BTreeSet::new();
    for e in &embedded.embeddings {
        embedding_debates.extend(train.user_votes(e.user).iter().map(|v| v.debate));
    }

    let mut outcomes = Vec::new();
    for e in &embedded.embeddings {
        for v in corpus
            .user_votes(e.user)
            .iter()
            .filter(|v| fold.is_test(v.debate))
        {
            let pro = vectors
                .get(crate::corpus::BeliefKey::new(v.debate, Polarity::Pro))?
                .clone();
            let con = vectors.get(crate::corpus::BeliefKey::new(v.debate, Polarity::Con))?;
            let call = nearest_stance(&e.vector, &pro, con, train_majority)?;
            let debate = corpus.debate(v.debate);
            outcomes.push(PredictionOutcome {
                user_id: corpus.user_id(e.user).into(),
                debate_id: debate.debate_id.clone(),
                category: debate.category.clone(),
                history: e.support,
                d_min: call.d_min,
                d_max: call.d_max,
                d_avg: call.d_avg,
                predicted: call.predicted,
                truth: v.polarity,
                correct: call.predicted == v.polarity,
                tie: call.tie,
            });
        }
    }
    Ok(FoldOutcomes {
        outcomes,
        skipped_users: embedded.excluded,
        user_embeddings: embedded.embeddings,
        embedding_debates,
        train_majority,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of true instances of the class.
    pub support: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricReport {
    pub n: usize,
    pub accuracy: f64,
    /// Unweighted mean of the PRO and CON F1 (an absent class scores 0).
    pub macro_f1: f64,
    pub pro: ClassMetrics,
    pub con: ClassMetrics,
}

impl MetricReport {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Polarity, Polarity)>) -> Self {
        // confusion[truth][predicted]
        let mut confusion = [[0usize; 2]; 2];
        for (predicted, truth) in pairs {
            confusion[truth.index()][predicted.index()] += 1;
        }
        let n: usize = confusion.iter().flatten().sum();
        if n == 0 {
            return Self::default();
        }
        let class = |c: usize| {
            let tp = confusion[c][c] as f64;
            let predicted = (confusion[0][c] + confusion[1][c]) as f64;
            let actual = (confusion[c][0] + confusion[c][1]) as f64;
            let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
            let recall = if actual > 0.0 { tp / actual } else { 0.0 };
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                precision,
                recall,
                f1,
                support: actual as usize,
            }
        };
        let (pro, con) = (class(0), class(1));
        Self {
            n,
            accuracy: (confusion[0][0] + confusion[1][1]) as f64 / n as f64,
            macro_f1: (pro.f1 + con.f1) / 2.0,
            pro,
            con,
        }
    }
}

pub fn metrics(outcomes: &[PredictionOutcome]) -> MetricReport {
    MetricReport::from_pairs(outcomes.iter().map(|o| (o.predicted, o.truth)))
}

/// Uniform coin flip per outcome from the `baseline-random` substream.
pub fn baseline_random(outcomes: &[PredictionOutcome], seed: u64) -> MetricReport {
    let mut rng = hash::stream(seed, "baseline-random");
    MetricReport::from_pairs(outcomes.iter().map(|o| {
        let p = if rng.gen::<bool>() {
            Polarity::Pro
        } else {
            Polarity::Con
        };
        (p, o.truth)
    }))
}

/// Constant prediction of the train set's majority polarity.
pub fn baseline_majority(train_majority: Polarity, outcomes: &[PredictionOutcome]) -> MetricReport {
    MetricReport::from_pairs(outcomes.iter().map(|o| (train_majority, o.truth)))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HistoryBucket {
    /// Users with fewer than this many train votes.
    pub below: usize,
    pub users: usize,
    /// Metrics over the pooled outcomes of those users.
    pub pooled: MetricReport,
    /// Mean over users of each user's own accuracy.
    pub user_mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BreakdownReport {
    pub overall: MetricReport,
    pub per_category: BTreeMap<String, MetricReport>,
    pub per_history: Vec<HistoryBucket>,
}

pub const DEFAULT_HISTORY_THRESHOLDS: [usize; 9] = [2, 4, 8, 16, 32, 64, 128, 256, 512];

pub fn breakdown(outcomes: &[PredictionOutcome], history_thresholds: &[usize]) -> BreakdownReport {
    let mut by_category: BTreeMap<String, Vec<(Polarity, Polarity)>> = BTreeMap::new();
    for o in outcomes {
        by_category
            .entry(o.category_or_default().into())
            .or_default()
            .push((o.predicted, o.truth));
    }
    let per_category = by_category
        .into_iter()
        .map(|(k, v)| (k, MetricReport::from_pairs(v)))
        .collect();

    let mut per_history = Vec::new();
    for &below in history_thresholds {
        let subset: Vec<&PredictionOutcome> =
            outcomes.iter().filter(|o| o.history < below).collect();
        if subset.is_empty() {
            continue;
        }
        let mut per_user: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        for o in &subset {
            let e = per_user.entry(o.user_id.as_str()).or_insert((0, 0));
            e.0 += usize::from(o.correct);
            e.1 += 1;
        }
        let user_mean_accuracy = per_user
            .values()
            .map(|&(c, n)| c as f64 / n as f64)
            .sum::<f64>()
            / per_user.len() as f64;
        per_history.push(HistoryBucket {
            below,
            users: per_user.len(),
            pooled: MetricReport::from_pairs(subset.iter().map(|o| (o.predicted, o.truth))),
            user_mean_accuracy,
        });
    }
    BreakdownReport {
        overall: metrics(outcomes),
        per_category,
        per_history,
    }
}

/// One histogram bin of a binned accuracy curve.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub correct: usize,
}

impl Bin {
    /// `None` for an empty bin.
    pub fn accuracy(&self) -> Option<f64> {
        (self.n > 0).then(|| self.correct as f64 / self.n as f64)
    }

    pub fn center(&self) -> f64 {
        if self.hi.is_finite() {
            (self.lo + self.hi) / 2.0
        } else {
            self.lo
        }
    }
}

/// Bins `[i w, (i+1) w)` from 0 up to the bin holding the largest value.
pub fn bin_accuracy(values: impl IntoIterator<Item = (f64, bool)>, width: f64) -> Result<Vec<Bin>> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidBinWidth(width));
    }
    let mut bins: Vec<Bin> = Vec::new();
    for (x, correct) in values {
        let i = bin_index(x, width);
        while bins.len() <= i {
            let k = bins.len() as f64;
            bins.push(Bin {
                lo: k * width,
                hi: (k + 1.0) * width,
                n: 0,
                correct: 0,
            });
        }
        bins[i].n += 1;
        bins[i].correct += usize::from(correct);
    }
    Ok(bins)
}

/// Bin of `x` for width `w`; values within 1e-9 bin widths below an edge
/// count as on it, so decimal edges like `1.2 / 0.1` land where expected.
pub(crate) fn bin_index(x: f64, width: f64) -> usize {
    let q = libm::floor(x / width + 1e-9);
    if q <= 0.0 {
        0
    } else {
        q as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridCell {
    pub d_min_lo: f64,
    pub d_max_lo: f64,
    pub n: usize,
    pub correct: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DistanceResponse {
    pub width: f64,
    pub d_min: Vec<Bin>,
    pub d_max: Vec<Bin>,
    pub d_avg: Vec<Bin>,
    /// Dense `(d_min, d_max)` grid, row-major by d_min bin.
    pub grid: Vec<GridCell>,
}

pub fn distance_response(outcomes: &[PredictionOutcome], width: f64) -> Result<DistanceResponse> {
    let curve = |f: fn(&PredictionOutcome) -> f64| {
        bin_accuracy(outcomes.iter().map(|o| (f(o), o.correct)), width)
    };
    let d_min = curve(|o| o.d_min)?;
    let d_max = curve(|o| o.d_max)?;
    let d_avg = curve(|o| o.d_avg)?;
    let (rows, cols) = (d_min.len(), d_max.len());
    let mut grid: Vec<GridCell> = (0..rows * cols)
        .map(|k| GridCell {
            d_min_lo: (k / cols) as f64 * width,
            d_max_lo: (k % cols) as f64 * width,
            n: 0,
            correct: 0,
        })
        .collect();
    for o in outcomes {
        let cell = &mut grid[bin_index(o.d_min, width) * cols + bin_index(o.d_max, width)];
        cell.n += 1;
        cell.correct += usize::from(o.correct);
    }
    Ok(DistanceResponse {
        width,
        d_min,
        d_max,
        d_avg,
        grid,
    })
}

/// Spearman correlation between bin centers and bin accuracy over bins with at
/// least `min_count` outcomes.
pub fn bin_trend(bins: &[Bin], min_count: usize) -> Result<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = bins
        .iter()
        .filter(|b| b.n >= min_count.max(1))
        .map(|b| (b.center(), b.correct as f64 / b.n as f64))
        .unzip();
    stats::spearman(&x, &y)
}
