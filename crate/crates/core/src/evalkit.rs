//! Model-quality evaluation and the fold-wise pipeline.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{Corpus, DebateIdx, FoldSplit};
use crate::dissonance::{
    self, CategoryCorrelation, DstarBinning, DstarCurve, GroupComparison, PermutationTest,
};
use crate::encoder::{self, EncoderModel, StatementVectors, TrainConfig};
use crate::error::{Error, Result};
use crate::hash;
use crate::linalg::{dot, euclidean, norm};
use crate::predict::{self, BreakdownReport, DistanceResponse, MetricReport, PredictionOutcome};
use crate::profile::{Grouping, Profiles};
use crate::space::UserEmbedding;
use crate::stats;
use crate::triplets::{
    sample_triplets, triplet_stats, CoocTable, SamplingConfig, SkipReport, Triplet, TripletStats,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TripletEvalReport {
    pub split: Split,
    pub n: usize,
    pub correct: usize,
    /// Fraction with `|a - p| < |a - n|`; ties count as failures.
    pub accuracy: f64,
}

/// Triplet accuracy over already-encoded `(anchor, positive, negative)` vectors.
pub fn eval_triplet_vectors<'a>(
    triplets: impl IntoIterator<Item = (&'a [f64], &'a [f64], &'a [f64])>,
    split: Split,
) -> Result<TripletEvalReport> {
    let (mut n, mut correct) = (0usize, 0usize);
    for (a, p, neg) in triplets {
        encoder::check_dim(a.len(), p.len())?;
        encoder::check_dim(a.len(), neg.len())?;
        n += 1;
        correct += usize::from(euclidean(a, p) < euclidean(a, neg));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("no triplets to evaluate".into()));
    }
    Ok(TripletEvalReport {
        split,
        n,
        correct,
        accuracy: correct as f64 / n as f64,
    })
}

pub fn eval_triplets(
    model: &EncoderModel,
    corpus: &Corpus,
    triplets: &[Triplet],
    split: Split,
) -> Result<TripletEvalReport> {
    let mut vectors = StatementVectors::new(model, corpus);
    let mut encoded = Vec::with_capacity(triplets.len());
    for t in triplets {
        encoded.push([
            vectors.get(t.anchor)?.clone(),
            vectors.get(t.positive)?.clone(),
            vectors.get(t.negative)?.clone(),
        ]);
    }
    eval_triplet_vectors(
        encoded.iter().map(|[a, p, n]| (&a[..], &p[..], &n[..])),
        split,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct StsPair {
    pub sentence_a: String,
    pub sentence_b: String,
    /// Human similarity score in `[0, 5]`.
    pub score: f64,
}

/// Spearman correlation between human scores and embedding cosine similarity.
pub fn eval_sts(model: &EncoderModel, pairs: &[StsPair]) -> Result<f64> {
    if pairs.len() < 3 {
        return Err(Error::TooFewPoints {
            need: 3,
            got: pairs.len(),
        });
    }
    let mut scores = Vec::with_capacity(pairs.len());
    let mut sims = Vec::with_capacity(pairs.len());
    for pair in pairs {
        if !(0.0..=5.0).contains(&pair.score) {
            return Err(Error::InvalidArgument(format!(
                "STS score {} outside [0, 5]",
                pair.score
            )));
        }
        let a = model.encode(&pair.sentence_a)?;
        let b = model.encode(&pair.sentence_b)?;
        let (na, nb) = (norm(&a), norm(&b));
        if na == 0.0 || nb == 0.0 {
            return Err(Error::ZeroNorm);
        }
        scores.push(pair.score);
        sims.push(dot(&a, &b) / (na * nb));
    }
    stats::spearman(&scores, &sims)
}

/// How each fold obtains its encoder.
#[derive(Debug, Clone)]
pub enum EncoderSource {
    /// Train a linear encoder on the fold's train triplets.
    Train(TrainConfig),
    /// Use the same fixed model in every fold.
    Fixed(EncoderModel),
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub k: usize,
    pub seed: u64,
    pub encoder: EncoderSource,
    pub sampling: SamplingConfig,
    /// Bin width for the d_min / d_max / d_avg curves.
    pub distance_width: f64,
    pub dstar: DstarBinning,
    pub permutations: usize,
    pub history_thresholds: Vec<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k: 5,
            seed: 0,
            encoder: EncoderSource::Train(TrainConfig::default()),
            sampling: SamplingConfig::default(),
            distance_width: 1.0,
            dstar: DstarBinning::default(),
            permutations: 1000,
            history_thresholds: predict::DEFAULT_HISTORY_THRESHOLDS.to_vec(),
        }
    }
}

/// Pipeline stage, used to label fold failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Stage {
    Triplets,
    Train,
    Evaluate,
    Predict,
    Dissonance,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Triplets => "triplets",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Predict => "predict",
            Stage::Dissonance => "dissonance",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldError {
    pub fold_index: usize,
    pub stage: Stage,
    pub error: Error,
}

impl core::fmt::Display for FoldError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "fold {} failed at {}: {}",
            self.fold_index,
            self.stage.as_str(),
            self.error
        )
    }
}

/// Serializable per-fold summary.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FoldReport {
    pub fold_index: usize,
    pub train_debates: usize,
    pub test_debates: usize,
    pub evaluable_users: usize,
    pub skipped_users: usize,
    pub train_triplets: TripletStats,
    pub train_sampling: SkipReport,
    pub test_triplets: TripletStats,
    pub test_sampling: SkipReport,
    /// Test triplets mirror the train procedure on test-fold co-occurrence.
    pub test_triplet_source: String,
    pub loss_trace: Vec<f64>,
    pub train_eval: TripletEvalReport,
    pub test_eval: Option<TripletEvalReport>,
    pub metrics: BreakdownReport,
    pub baseline_random: MetricReport,
    pub baseline_majority: MetricReport,
    pub ties: usize,
    pub distance: DistanceResponse,
    pub dstar: DstarCurve,
    pub dstar_trend: PermutationTest,
    pub party: Option<GroupComparison>,
    pub religion: Option<GroupComparison>,
    pub categories: Option<CategoryCorrelation>,
    /// Analyses that could not be computed for this fold, with the reason.
    pub notes: Vec<String>,
}

/// Everything a fold produced, including the non-summary artifacts.
#[derive(Debug, Clone)]
pub struct FoldRun {
    pub report: FoldReport,
    pub model: EncoderModel,
    pub train_triplets: Vec<Triplet>,
    pub test_triplets: Vec<Triplet>,
    pub outcomes: Vec<PredictionOutcome>,
    pub user_embeddings: Vec<UserEmbedding>,
    pub embedding_debates: Vec<DebateIdx>,
}

/// Fold-specific seed for a named stage.
pub fn fold_seed(seed: u64, label: &str, fold: usize) -> u64 {
    hash::indexed_seed(seed, label, fold as u64)
}

pub const TEST_TRIPLET_SOURCE: &str = "test-fold co-occurrence, train sampling rule";

pub fn run_fold(
    corpus: &Corpus,
    profiles: Option<&Profiles>,
    fold: &FoldSplit,
    config: &PipelineConfig,
) -> core::result::Result<FoldRun, FoldError> {
    let i = fold.fold_index;
    let at = |stage: Stage| {
        move |error: Error| FoldError {
            fold_index: i,
            stage,
            error,
        }
    };

    let train_corpus = corpus.restrict(&fold.train_mask());
    let test_corpus = corpus.restrict(&fold.test_mask());
    let train_sample = sample_triplets(
        &CoocTable::build(&train_corpus),
        &train_corpus,
        &config.sampling,
        fold_seed(config.seed, "fold-train-triplets", i),
    );
    let test_sample = sample_triplets(
        &CoocTable::build(&test_corpus),
        &test_corpus,
        &config.sampling,
        fold_seed(config.seed, "fold-test-triplets", i),
    );
    if train_sample.triplets.is_empty() {
        return Err(at(Stage::Triplets)(Error::InvalidArgument(
            "no train triplets".into(),
        )));
    }

    let (model, loss_trace) = match &config.encoder {
        EncoderSource::Train(tc) => {
            let tc = TrainConfig {
                seed: fold_seed(config.seed, "fold-train", i),
                ..*tc
            };
            let out =
                encoder::train(&train_sample.triplets, corpus, &tc).map_err(at(Stage::Train))?;
            (EncoderModel::Trained(out.model), out.loss_trace)
        }
        EncoderSource::Fixed(m) => (m.clone(), Vec::new()),
    };

    let train_eval = eval_triplets(&model, corpus, &train_sample.triplets, Split::Train)
        .map_err(at(Stage::Evaluate))?;
    let test_eval = if test_sample.triplets.is_empty() {
        None
    } else {
        Some(
            eval_triplets(&model, corpus, &test_sample.triplets, Split::Test)
                .map_err(at(Stage::Evaluate))?,
        )
    };

    let fo = predict::run_fold(&model, corpus, fold).map_err(at(Stage::Predict))?;
    let outcomes = fo.outcomes;
    let mut notes = Vec::new();
    let distance = predict::distance_response(&outcomes, config.distance_width)
        .map_err(at(Stage::Dissonance))?;
    let dstar = dissonance::accuracy_vs_dstar(&outcomes, &config.dstar);
    let dstar_trend = dissonance::slope_permutation_test(
        &outcomes,
        &config.dstar,
        config.permutations,
        fold_seed(config.seed, "fold-dstar", i),
    );
    let mut compare = |g: Grouping| -> Option<GroupComparison> {
        let p = profiles?;
        match dissonance::group_compare(&outcomes, p, g, &config.dstar) {
            Ok(c) => Some(c),
            Err(e) => {
                notes.push(format!("group comparison ({:?}): {e}", g));
                None
            }
        }
    };
    let party = compare(Grouping::Party);
    let religion = compare(Grouping::Religion);
    let categories = match dissonance::category_dstar_correlation(&outcomes) {
        Ok(c) => Some(c),
        Err(e) => {
            notes.push(format!("category correlation: {e}"));
            None
        }
    };

    let report = FoldReport {
        fold_index: i,
        train_debates: fold.train_debates.len(),
        test_debates: fold.test_debates.len(),
        evaluable_users: fo.user_embeddings.len(),
        skipped_users: fo.skipped_users.len(),
        train_triplets: triplet_stats(&train_sample.triplets, corpus),
        train_sampling: train_sample.report,
        test_triplets: triplet_stats(&test_sample.triplets, corpus),
        test_sampling: test_sample.report,
        test_triplet_source: TEST_TRIPLET_SOURCE.to_owned(),
        loss_trace,
        train_eval,
        test_eval,
        metrics: predict::breakdown(&outcomes, &config.history_thresholds),
        baseline_random: predict::baseline_random(
            &outcomes,
            fold_seed(config.seed, "fold-baseline", i),
        ),
        baseline_majority: predict::baseline_majority(fo.train_majority, &outcomes),
        ties: outcomes.iter().filter(|o| o.tie).count(),
        distance,
        dstar,
        dstar_trend,
        party,
        religion,
        categories,
        notes,
    };
    Ok(FoldRun {
        report,
        model,
        train_triplets: train_sample.triplets,
        test_triplets: test_sample.triplets,
        outcomes,
        user_embeddings: fo.user_embeddings,
        embedding_debates: fo.embedding_debates.into_iter().collect(),
    })
}

/// Sequential pipeline over all folds; a failing fold does not stop the others.
pub fn run_pipeline(
    corpus: &Corpus,
    profiles: Option<&Profiles>,
    config: &PipelineConfig,
) -> Result<Vec<core::result::Result<FoldRun, FoldError>>> {
    let folds = crate::corpus::make_folds(corpus, config.k, config.seed)?;
    Ok(folds
        .iter()
        .map(|f| run_fold(corpus, profiles, f, config))
        .collect())
}

/// Headline numbers taken from each fold report.
pub const HEADLINE_METRICS: [&str; 9] = [
    "train_triplet_accuracy",
    "test_triplet_accuracy",
    "accuracy",
    "macro_f1",
    "random_accuracy",
    "random_macro_f1",
    "majority_accuracy",
    "majority_macro_f1",
    "dstar_slope",
];

pub fn headline_value(report: &FoldReport, metric: &str) -> Option<f64> {
    Some(match metric {
        "train_triplet_accuracy" => report.train_eval.accuracy,
        "test_triplet_accuracy" => report.test_eval?.accuracy,
        "accuracy" => report.metrics.overall.accuracy,
        "macro_f1" => report.metrics.overall.macro_f1,
        "random_accuracy" => report.baseline_random.accuracy,
        "random_macro_f1" => report.baseline_random.macro_f1,
        "majority_accuracy" => report.baseline_majority.accuracy,
        "majority_macro_f1" => report.baseline_majority.macro_f1,
        "dstar_slope" => report.dstar.slope,
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AggregateRow {
    pub metric: String,
    pub mean: f64,
    /// Sample standard deviation across folds (0 for a single fold).
    pub std: f64,
    pub folds: usize,
}

/// Mean and sample standard deviation of one metric's per-fold values.
pub fn summarize(metric: &str, values: &[f64]) -> Option<AggregateRow> {
    if values.is_empty() {
        return None;
    }
    Some(AggregateRow {
        metric: metric.into(),
        mean: stats::mean(values),
        std: stats::std_dev(values),
        folds: values.len(),
    })
}

pub fn aggregate(reports: &[FoldReport]) -> Vec<AggregateRow> {
    HEADLINE_METRICS
        .iter()
        .filter_map(|&metric| {
            let xs: Vec<f64> = reports
                .iter()
                .filter_map(|r| headline_value(r, metric))
                .collect();
            summarize(metric, &xs)
        })
        .collect()
}
