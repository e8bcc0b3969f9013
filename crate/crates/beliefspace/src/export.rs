//! CSV artifacts and their companion plots.

use beliefspace_core::dissonance::{CategoryRow, DstarCurve, GroupComparison};
use beliefspace_core::evalkit::AggregateRow;
use beliefspace_core::predict::{Bin, DistanceResponse, PredictionOutcome};
use beliefspace_core::space::PolarizationRecord;
use beliefspace_core::triplets::Triplet;
use beliefspace_core::Corpus;

use crate::error::CliResult;
use crate::io::OUTCOME_COLUMNS;
use crate::manifest::{fmt_f64, fmt_opt, OutputDir};
use crate::svg::{Plot, Series};

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.into()
}

pub fn triplets(
    out: &mut OutputDir,
    rel: &str,
    corpus: &Corpus,
    triplets: &[Triplet],
) -> CliResult<()> {
    let id = |k: beliefspace_core::BeliefKey| corpus.debate(k.debate).debate_id.clone();
    out.csv(
        rel,
        &[
            "anchor_debate",
            "anchor_polarity",
            "positive_debate",
            "positive_polarity",
            "negative_debate",
            "negative_polarity",
        ],
        triplets.iter().map(|t| {
            [
                id(t.anchor),
                t.anchor.polarity.as_str().into(),
                id(t.positive),
                t.positive.polarity.as_str().into(),
                id(t.negative),
                t.negative.polarity.as_str().into(),
            ]
        }),
    )
}

pub fn outcomes(out: &mut OutputDir, rel: &str, outcomes: &[PredictionOutcome]) -> CliResult<()> {
    out.csv(
        rel,
        &OUTCOME_COLUMNS,
        outcomes.iter().map(|o| {
            [
                o.user_id.clone(),
                o.debate_id.clone(),
                o.category.clone().unwrap_or_default(),
                fmt_f64(o.d_min),
                fmt_f64(o.d_max),
                fmt_f64(o.d_avg),
                fmt_opt(o.d_star()),
                o.predicted.as_str().into(),
                o.truth.as_str().into(),
                flag(o.correct),
                flag(o.tie),
            ]
        }),
    )
}

pub fn loss_trace(out: &mut OutputDir, rel: &str, trace: &[f64]) -> CliResult<()> {
    out.csv(
        rel,
        &["epoch", "mean_loss"],
        trace
            .iter()
            .enumerate()
            .map(|(i, l)| [i.to_string(), fmt_f64(*l)]),
    )?;
    if trace.is_empty() {
        return Ok(());
    }
    let plot = Plot::new("Training loss", "epoch", "mean triplet loss").with(Series::line(
        "loss",
        trace
            .iter()
            .enumerate()
            .map(|(i, &l)| (i as f64, l))
            .collect(),
    ));
    out.write(&rel.replace(".csv", ".svg"), plot.render()?.into_bytes())
}

fn bin_row(b: &Bin) -> [String; 4] {
    [
        fmt_f64(b.lo),
        fmt_f64(b.hi),
        b.n.to_string(),
        fmt_opt(b.accuracy()),
    ]
}

fn curve_points(bins: &[Bin]) -> Vec<(f64, f64)> {
    bins.iter()
        .filter_map(|b| b.accuracy().map(|a| (b.center(), a)))
        .collect()
}

/// Accuracy by d_min, d_max and d_avg bins, plus the (d_min, d_max) grid.
pub fn distance(out: &mut OutputDir, dir: &str, response: &DistanceResponse) -> CliResult<()> {
    let measures = [
        ("d_min", &response.d_min),
        ("d_max", &response.d_max),
        ("d_avg", &response.d_avg),
    ];
    out.csv(
        &format!("{dir}distance_bins.csv"),
        &["measure", "bin_lo", "bin_hi", "n", "accuracy"],
        measures.iter().flat_map(|(name, bins)| {
            bins.iter().map(move |b| {
                let [lo, hi, n, acc] = bin_row(b);
                [name.to_string(), lo, hi, n, acc]
            })
        }),
    )?;
    out.csv(
        &format!("{dir}distance_grid.csv"),
        &["d_min_lo", "d_max_lo", "n", "correct", "accuracy"],
        response.grid.iter().map(|c| {
            let acc = (c.n > 0).then(|| c.correct as f64 / c.n as f64);
            [
                fmt_f64(c.d_min_lo),
                fmt_f64(c.d_max_lo),
                c.n.to_string(),
                c.correct.to_string(),
                fmt_opt(acc),
            ]
        }),
    )?;
    let mut plot = Plot::new("Accuracy by distance", "distance (bin center)", "accuracy");
    for (name, bins) in measures {
        let pts = curve_points(bins);
        if !pts.is_empty() {
            plot = plot.with(Series::line(name, pts));
        }
    }
    if !plot.series.is_empty() {
        out.write(&format!("{dir}distance.svg"), plot.render()?.into_bytes())?;
    }
    Ok(())
}

/// `x` position of a d* bin in plots: the center, or the start for the overflow bin.
fn dstar_points(curve: &DstarCurve) -> Vec<(f64, f64)> {
    curve_points(&curve.bins)
}

pub fn dstar_curve(out: &mut OutputDir, dir: &str, curve: &DstarCurve) -> CliResult<()> {
    out.csv(
        &format!("{dir}dstar_curve.csv"),
        &["bin_lo", "bin_hi", "n", "accuracy"],
        curve.bins.iter().map(bin_row),
    )?;
    let pts = dstar_points(curve);
    if !pts.is_empty() {
        let plot = Plot::new("Accuracy vs relative dissonance", "d*", "accuracy")
            .with(Series::line("all", pts));
        out.write(&format!("{dir}dstar.svg"), plot.render()?.into_bytes())?;
    }
    Ok(())
}

/// Per-group curves and per-bin Welch tests for any computed groupings.
pub fn group_comparisons(
    out: &mut OutputDir,
    dir: &str,
    comparisons: &[(&str, &GroupComparison)],
) -> CliResult<()> {
    if comparisons.is_empty() {
        return Ok(());
    }
    let mut curves = Vec::new();
    let mut tests = Vec::new();
    for (grouping, c) in comparisons {
        for (label, curve) in c.labels.iter().zip(&c.curves) {
            for b in &curve.bins {
                let [lo, hi, n, acc] = bin_row(b);
                curves.push([label.clone(), lo, hi, n, acc]);
            }
        }
        for t in &c.tests {
            let w = t.welch.as_ref();
            tests.push([
                grouping.to_string(),
                fmt_f64(t.lo),
                fmt_f64(t.hi),
                t.n[0].to_string(),
                t.n[1].to_string(),
                fmt_opt(w.map(|w| w.t)),
                fmt_opt(w.map(|w| w.df)),
                fmt_opt(w.map(|w| w.p_value)),
            ]);
        }
        let mut plot = Plot::new(&format!("Accuracy vs d* by {grouping}"), "d*", "accuracy");
        for (label, curve) in c.labels.iter().zip(&c.curves) {
            let pts = dstar_points(curve);
            if !pts.is_empty() {
                plot = plot.with(Series::line(label.as_str(), pts));
            }
        }
        if !plot.series.is_empty() {
            out.write(
                &format!("{dir}dstar_{grouping}.svg"),
                plot.render()?.into_bytes(),
            )?;
        }
    }
    out.csv(
        &format!("{dir}dstar_groups.csv"),
        &["group", "bin_lo", "bin_hi", "n", "accuracy"],
        curves,
    )?;
    out.csv(
        &format!("{dir}group_tests.csv"),
        &[
            "grouping", "bin_lo", "bin_hi", "n_a", "n_b", "welch_t", "welch_df", "p_value",
        ],
        tests,
    )
}

pub fn categories(out: &mut OutputDir, dir: &str, rows: &[CategoryRow]) -> CliResult<()> {
    out.csv(
        &format!("{dir}categories.csv"),
        &["category", "mean_dstar", "macro_f1", "n"],
        rows.iter().map(|r| {
            [
                r.category.clone(),
                fmt_f64(r.mean_dstar),
                fmt_f64(r.macro_f1),
                r.n.to_string(),
            ]
        }),
    )?;
    if rows.is_empty() {
        return Ok(());
    }
    let plot =
        Plot::new("Category mean d* vs macro-F1", "mean d*", "macro-F1").with(Series::points(
            "categories",
            rows.iter().map(|r| (r.mean_dstar, r.macro_f1)).collect(),
        ));
    out.write(&format!("{dir}categories.svg"), plot.render()?.into_bytes())
}

/// Polarization rows with an optional partisan pro-ratio gap per issue.
pub fn polarization(
    out: &mut OutputDir,
    records: &[(PolarizationRecord, Option<f64>)],
) -> CliResult<()> {
    out.csv(
        "polarization.csv",
        &[
            "issue",
            "euclid",
            "cosine",
            "n_pro",
            "n_con",
            "pro_ratio_gap",
        ],
        records.iter().map(|(r, gap)| {
            [
                r.issue.clone(),
                fmt_f64(r.euclid),
                fmt_f64(r.cosine),
                r.n_pro.to_string(),
                r.n_con.to_string(),
                fmt_opt(*gap),
            ]
        }),
    )?;
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|(r, g)| g.map(|g| (g, r.euclid)))
        .collect();
    if pts.is_empty() {
        return Ok(());
    }
    let plot = Plot::new(
        "Pro-ratio gap vs centroid distance",
        "partisan pro-ratio gap",
        "Euclidean centroid distance",
    )
    .with(Series::points("issues", pts));
    out.write("polarization.svg", plot.render()?.into_bytes())
}

pub fn aggregate(out: &mut OutputDir, rows: &[AggregateRow]) -> CliResult<()> {
    out.csv(
        "aggregate.csv",
        &["metric", "mean", "std", "folds"],
        rows.iter().map(|r| {
            [
                r.metric.clone(),
                fmt_f64(r.mean),
                fmt_f64(r.std),
                r.folds.to_string(),
            ]
        }),
    )
}
