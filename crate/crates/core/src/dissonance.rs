//! Relative dissonance `d* = (d_max - d_min) / d_min` and its relation to accuracy.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::hash;
use crate::predict::{Bin, MetricReport, PredictionOutcome};
use crate::profile::{Grouping, Profiles};
use crate::stats::{self, WelchTest};

pub const DEFAULT_WIDTH: f64 = 0.1;
pub const DEFAULT_UPPER: f64 = 1.2;

/// `Ok(None)` when `d_min == 0` (undefined); error when `d_min > d_max`.
pub fn d_star(d_min: f64, d_max: f64) -> Result<Option<f64>> {
    if d_min > d_max || d_min < 0.0 {
        return Err(Error::DistanceOrder { d_min, d_max });
    }
    if d_min == 0.0 {
        return Ok(None);
    }
    Ok(Some((d_max - d_min) / d_min))
}

/// Regular bins `[i w, (i+1) w)` up to `upper`, then one overflow bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DstarBinning {
    pub width: f64,
    pub upper: f64,
}

impl Default for DstarBinning {
    fn default() -> Self {
        Self {
            width: DEFAULT_WIDTH,
            upper: DEFAULT_UPPER,
        }
    }
}

impl DstarBinning {
    pub fn new(width: f64, upper: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidBinWidth(width));
        }
        if !(upper > 0.0 && upper.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "d* upper bound must be positive, got {upper}"
            )));
        }
        Ok(Self { width, upper })
    }

    fn n_regular(&self) -> usize {
        // tolerate 1.2 / 0.1 = 11.999...
        libm::ceil(self.upper / self.width - 1e-9).max(1.0) as usize
    }

    pub fn n_bins(&self) -> usize {
        self.n_regular() + 1
    }

    pub fn index(&self, x: f64) -> usize {
        crate::predict::bin_index(x, self.width).min(self.n_regular())
    }

    fn empty_bins(&self) -> Vec<Bin> {
        let r = self.n_regular();
        (0..=r)
            .map(|i| Bin {
                lo: i as f64 * self.width,
                hi: if i == r {
                    f64::INFINITY
                } else {
                    (i + 1) as f64 * self.width
                },
                n: 0,
                correct: 0,
            })
            .collect()
    }

    /// Regression abscissa of bin `i`; the overflow bin sits half a width past its start.
    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.width
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DstarCurve {
    pub bins: Vec<Bin>,
    /// Outcomes with `d_min == 0`.
    pub excluded: usize,
    /// Count-weighted least-squares slope of bin accuracy on bin center.
    pub slope: f64,
}

fn curve_from_indices(
    binning: &DstarBinning,
    idx: &[usize],
    correct: impl Iterator<Item = bool>,
    excluded: usize,
) -> DstarCurve {
    let mut bins = binning.empty_bins();
    for (&i, c) in idx.iter().zip(correct) {
        bins[i].n += 1;
        bins[i].correct += usize::from(c);
    }
    let slope = slope_of(binning, &bins);
    DstarCurve {
        bins,
        excluded,
        slope,
    }
}

fn slope_of(binning: &DstarBinning, bins: &[Bin]) -> f64 {
    let (mut x, mut y, mut w) = (Vec::new(), Vec::new(), Vec::new());
    for (i, b) in bins.iter().enumerate() {
        if let Some(acc) = b.accuracy() {
            x.push(binning.center(i));
            y.push(acc);
            w.push(b.n as f64);
        }
    }
    stats::weighted_slope(&x, &y, &w)
}

fn defined(outcomes: &[PredictionOutcome]) -> (Vec<(f64, bool)>, usize) {
    let mut kept = Vec::with_capacity(outcomes.len());
    let mut excluded = 0;
    for o in outcomes {
        match o.d_star() {
            Some(d) => kept.push((d, o.correct)),
            None => excluded += 1,
        }
    }
    (kept, excluded)
}

pub fn accuracy_vs_dstar(outcomes: &[PredictionOutcome], binning: &DstarBinning) -> DstarCurve {
    let (kept, excluded) = defined(outcomes);
    let idx: Vec<usize> = kept.iter().map(|&(d, _)| binning.index(d)).collect();
    curve_from_indices(binning, &idx, kept.iter().map(|&(_, c)| c), excluded)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PermutationTest {
    pub observed: f64,
    pub permutations: usize,
    /// One-sided: `(1 + #{permuted slope >= observed}) / (1 + permutations)`.
    pub p_value: f64,
}

/// Null distribution of the d* slope under random reassignment of correctness flags.
pub fn slope_permutation_test(
    outcomes: &[PredictionOutcome],
    binning: &DstarBinning,
    permutations: usize,
    seed: u64,
) -> PermutationTest {
    let (kept, _) = defined(outcomes);
    let idx: Vec<usize> = kept.iter().map(|&(d, _)| binning.index(d)).collect();
    let mut flags: Vec<bool> = kept.iter().map(|&(_, c)| c).collect();
    let observed = curve_from_indices(binning, &idx, flags.iter().copied(), 0).slope;
    let mut rng = hash::stream(seed, "dstar-permutation");
    let mut at_least = 0usize;
    for _ in 0..permutations {
        flags.shuffle(&mut rng);
        let s = curve_from_indices(binning, &idx, flags.iter().copied(), 0).slope;
        if s >= observed {
            at_least += 1;
        }
    }
    PermutationTest {
        observed,
        permutations,
        p_value: (1 + at_least) as f64 / (1 + permutations) as f64,
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinTest {
    pub lo: f64,
    pub hi: f64,
    pub n: [usize; 2],
    /// Welch test on per-outcome correctness; `None` when a group has fewer than two outcomes.
    pub welch: Option<WelchTest>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupComparison {
    pub labels: [String; 2],
    pub curves: [DstarCurve; 2],
    pub tests: Vec<BinTest>,
    /// Bins skipped for testing.
    pub skipped_bins: usize,
}

pub fn group_compare(
    outcomes: &[PredictionOutcome],
    profiles: &Profiles,
    grouping: Grouping,
    binning: &DstarBinning,
) -> Result<GroupComparison> {
    let mut split: [Vec<PredictionOutcome>; 2] = [Vec::new(), Vec::new()];
    for o in outcomes {
        if let Some(side) = profiles.get(&o.user_id).and_then(|p| grouping.side(p)) {
            split[side].push(o.clone());
        }
    }
    let labels = grouping.labels();
    for (g, label) in split.iter().zip(labels) {
        if g.is_empty() {
            return Err(Error::EmptyGroup(format!("{label}: no outcomes")));
        }
    }
    let curves = [
        accuracy_vs_dstar(&split[0], binning),
        accuracy_vs_dstar(&split[1], binning),
    ];

    let mut samples: Vec<[Vec<f64>; 2]> = vec![[Vec::new(), Vec::new()]; binning.n_bins()];
    for (g, group) in split.iter().enumerate() {
        for o in group {
            if let Some(d) = o.d_star() {
                samples[binning.index(d)][g].push(if o.correct { 1.0 } else { 0.0 });
            }
        }
    }
    let mut skipped_bins = 0;
    let tests = samples
        .iter()
        .zip(&curves[0].bins)
        .map(|([a, b], bin)| {
            let welch = stats::welch_t_test(a, b).ok();
            if welch.is_none() {
                skipped_bins += 1;
            }
            BinTest {
                lo: bin.lo,
                hi: bin.hi,
                n: [a.len(), b.len()],
                welch,
            }
        })
        .collect();
    Ok(GroupComparison {
        labels: labels.map(String::from),
        curves,
        tests,
        skipped_bins,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CategoryRow {
    pub category: String,
    /// Mean d* over the category's outcomes with defined d*.
    pub mean_dstar: f64,
    pub macro_f1: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CategoryCorrelation {
    pub rows: Vec<CategoryRow>,
    pub pearson: f64,
}

/// Categories whose outcomes all have `d_min == 0` are left out.
pub fn category_table(outcomes: &[PredictionOutcome]) -> Vec<CategoryRow> {
    let mut groups: BTreeMap<&str, Vec<&PredictionOutcome>> = BTreeMap::new();
    for o in outcomes {
        groups.entry(o.category_or_default()).or_default().push(o);
    }
    groups
        .into_iter()
        .filter_map(|(category, outs)| {
            let ds: Vec<f64> = outs.iter().filter_map(|o| o.d_star()).collect();
            if ds.is_empty() {
                return None;
            }
            Some(CategoryRow {
                category: category.into(),
                mean_dstar: stats::mean(&ds),
                macro_f1: MetricReport::from_pairs(outs.iter().map(|o| (o.predicted, o.truth)))
                    .macro_f1,
                n: outs.len(),
            })
        })
        .collect()
}

pub fn category_dstar_correlation(outcomes: &[PredictionOutcome]) -> Result<CategoryCorrelation> {
    let rows = category_table(outcomes);
    if rows.len() < 3 {
        return Err(Error::TooFewPoints {
            need: 3,
            got: rows.len(),
        });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.mean_dstar).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.macro_f1).collect();
    let pearson = stats::pearson(&x, &y)?;
    Ok(CategoryCorrelation { rows, pearson })
}
