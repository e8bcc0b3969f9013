//! Fold-parallel pipeline runs and the report bundle they produce.
//!
//! Layout of a bundle directory:
//!
//! ```text
//! fold_0/report.json      full fold report
//! fold_0/headline.json    headline metrics, the input to aggregation
//! fold_0/*.csv, *.svg     outcomes, triplets, curves and tables
//! aggregate.json          mean / std per headline metric
//! aggregate.csv
//! manifest.json
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use beliefspace_core::corpus::make_folds;
use beliefspace_core::encoder::format::model_to_bytes;
use beliefspace_core::evalkit::{
    self, eval_sts, AggregateRow, FoldError, FoldRun, PipelineConfig, StsPair, HEADLINE_METRICS,
};
use beliefspace_core::profile::Profiles;
use beliefspace_core::{Corpus, EncoderModel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::export;
use crate::manifest::OutputDir;

pub const STS_METRIC: &str = "sts_spearman";

/// Run every fold on a pool of `threads` workers (rayon's default when `None`).
/// Results come back in fold order and do not depend on the thread count.
pub fn run_folds(
    corpus: &Corpus,
    profiles: Option<&Profiles>,
    config: &PipelineConfig,
    threads: Option<usize>,
) -> CliResult<Vec<Result<FoldRun, FoldError>>> {
    let folds =
        make_folds(corpus, config.k, config.seed).map_err(CliError::data("fold assignment"))?;
    let run = || {
        folds
            .par_iter()
            .map(|f| evalkit::run_fold(corpus, profiles, f, config))
            .collect::<Vec<_>>()
    };
    match threads {
        None => Ok(run()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
            Ok(pool.install(run))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedFold {
    pub fold_index: usize,
    pub stage: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub folds: usize,
    pub failed: Vec<FailedFold>,
    pub rows: Vec<AggregateRow>,
}

/// Finite headline numbers of one fold, keyed by metric name.
pub fn headline(run: &FoldRun, sts: Option<f64>) -> BTreeMap<String, f64> {
    let mut map: BTreeMap<String, f64> = HEADLINE_METRICS
        .iter()
        .filter_map(|&m| evalkit::headline_value(&run.report, m).map(|v| (m.to_owned(), v)))
        .filter(|(_, v)| v.is_finite())
        .collect();
    if let Some(s) = sts {
        map.insert(STS_METRIC.into(), s);
    }
    map
}

pub fn aggregate_headlines(headlines: &[BTreeMap<String, f64>]) -> Vec<AggregateRow> {
    HEADLINE_METRICS
        .iter()
        .copied()
        .chain([STS_METRIC])
        .filter_map(|m| {
            let xs: Vec<f64> = headlines.iter().filter_map(|h| h.get(m).copied()).collect();
            evalkit::summarize(m, &xs)
        })
        .collect()
}

/// Write every fold's artifacts plus the aggregate into `out`.
pub fn write_bundle(
    out: &mut OutputDir,
    corpus: &Corpus,
    runs: &[Result<FoldRun, FoldError>],
    sts: Option<&[StsPair]>,
) -> CliResult<Aggregate> {
    let mut headlines = Vec::new();
    let mut failed = Vec::new();
    for result in runs {
        match result {
            Ok(run) => {
                let i = run.report.fold_index;
                let dir = format!("fold_{i}/");
                let sts_value = match sts {
                    Some(pairs) => Some(
                        eval_sts(&run.model, pairs)
                            .map_err(CliError::data(format!("fold {i}: STS evaluation")))?,
                    ),
                    None => None,
                };
                write_fold(out, &dir, corpus, run)?;
                let h = headline(run, sts_value);
                out.json(&format!("{dir}headline.json"), &h)?;
                headlines.push(h);
            }
            Err(e) => {
                let f = FailedFold {
                    fold_index: e.fold_index,
                    stage: e.stage.as_str().into(),
                    error: e.error.to_string(),
                };
                out.json(&format!("fold_{}/error.json", e.fold_index), &f)?;
                failed.push(f);
            }
        }
    }
    let aggregate = Aggregate {
        folds: headlines.len(),
        failed,
        rows: aggregate_headlines(&headlines),
    };
    out.json("aggregate.json", &aggregate)?;
    export::aggregate(out, &aggregate.rows)?;
    Ok(aggregate)
}

pub fn write_fold(out: &mut OutputDir, dir: &str, corpus: &Corpus, run: &FoldRun) -> CliResult<()> {
    let r = &run.report;
    out.json(&format!("{dir}report.json"), r)?;
    export::outcomes(out, &format!("{dir}outcomes.csv"), &run.outcomes)?;
    export::triplets(
        out,
        &format!("{dir}train_triplets.csv"),
        corpus,
        &run.train_triplets,
    )?;
    export::triplets(
        out,
        &format!("{dir}test_triplets.csv"),
        corpus,
        &run.test_triplets,
    )?;
    if let EncoderModel::Trained(_) = run.model {
        out.write(&format!("{dir}model.blfm"), model_to_bytes(&run.model))?;
        export::loss_trace(out, &format!("{dir}loss.csv"), &r.loss_trace)?;
    }
    export::distance(out, dir, &r.distance)?;
    export::dstar_curve(out, dir, &r.dstar)?;
    let groups: Vec<(&str, &_)> = [
        ("party", r.party.as_ref()),
        ("religion", r.religion.as_ref()),
    ]
    .into_iter()
    .filter_map(|(n, c)| c.map(|c| (n, c)))
    .collect();
    export::group_comparisons(out, dir, &groups)?;
    if let Some(c) = &r.categories {
        export::categories(out, dir, &c.rows)?;
    }
    Ok(())
}

/// Headline metrics of one fold, tagged with its index.
pub type FoldHeadline = (usize, BTreeMap<String, f64>);

/// Re-aggregate a finished bundle from its per-fold headline files.
pub fn aggregate_dir(run_dir: &Path) -> CliResult<(Vec<FoldHeadline>, Vec<AggregateRow>)> {
    let entries = fs::read_dir(run_dir).map_err(|e| CliError::io(run_dir, e))?;
    let mut folds = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(run_dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some(index) = name
            .strip_prefix("fold_")
            .and_then(|s| s.parse::<usize>().ok())
        else {
            continue;
        };
        let path = entry.path().join("headline.json");
        if !path.exists() {
            continue;
        }
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let h: BTreeMap<String, f64> = serde_json::from_str(&text)
            .map_err(|e| CliError::parse(&path, e.line(), "<headline>", e.to_string()))?;
        folds.push((index, h));
    }
    if folds.is_empty() {
        return Err(CliError::Invalid(format!(
            "{}: no fold_*/headline.json files",
            run_dir.display()
        )));
    }
    folds.sort_by_key(|(i, _)| *i);
    let headlines: Vec<_> = folds.iter().map(|(_, h)| h.clone()).collect();
    let rows = aggregate_headlines(&headlines);
    Ok((folds, rows))
}
