//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use beliefspace::manifest::read_manifest;
use beliefspace_core::dissonance::{slope_permutation_test, DstarBinning};
use beliefspace_core::encoder::{
    triplet_loss, FeatureSpec, LinearEncoder, SparseFeatures, TrainingSet,
};
use beliefspace_core::evalkit::{run_pipeline, EncoderSource, FoldRun, PipelineConfig};
use beliefspace_core::predict::{
    self, baseline_majority, bin_accuracy, bin_trend, PredictionOutcome,
};
use beliefspace_core::space::fit_pca;
use beliefspace_core::stats::{pearson, spearman};
use beliefspace_core::synth::{generate_synthetic, SynthConfig, Synthetic};
use beliefspace_core::{BeliefKey, Corpus, DebateIdx, Polarity, TrainConfig};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

const PLANTED_SEED: u64 = 2024;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

struct Line {
    id: u8,
    name: &'static str,
    result: Check,
    elapsed: Duration,
}

fn run(id: u8, name: &'static str, limit: Option<Duration>, f: impl FnOnce() -> Check) -> Line {
    let start = Instant::now();
    let result = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    };
    let elapsed = start.elapsed();
    let result = match (result, limit) {
        (Ok(_), Some(l)) if elapsed > l => Err(format!("took {elapsed:.2?}, limit {l:?}")),
        (r, _) => r,
    };
    Line {
        id,
        name,
        result,
        elapsed,
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

// 1. loss

fn loss_correctness() -> Check {
    let reference =
        |a: &[f64], p: &[f64], n: &[f64], m: f64| (euclid(a, p) - euclid(a, n) + m).max(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let d = rng.gen_range(1..16);
        let mut v = || {
            (0..d)
                .map(|_| rng.gen_range(-5.0..5.0))
                .collect::<Vec<f64>>()
        };
        let (a, p, n) = (v(), v(), v());
        let got = triplet_loss(&a, &p, &n, 5.0).map_err(|e| e.to_string())?;
        worst = worst.max((got - reference(&a, &p, &n, 5.0)).abs());
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    let inactive = triplet_loss(&[0.0], &[0.0], &[10.0], 5.0).map_err(|e| e.to_string())?;
    let symmetric =
        triplet_loss(&[1.0, -2.0], &[3.0, 4.0], &[3.0, 4.0], 5.0).map_err(|e| e.to_string())?;
    let direct = triplet_loss(&[0.0], &[3.0], &[4.0], 5.0).map_err(|e| e.to_string())?;
    ensure(inactive == 0.0 && symmetric == 5.0 && direct == 4.0, || {
        format!("cases gave {inactive}, {symmetric}, {direct}")
    })?;
    Ok(format!("1000 random triplets, max deviation {worst:.1e}"))
}

// 2. gradient

fn gradient_check() -> Check {
    let (d, m, h) = (4usize, 16u32, 1e-5);
    let mut active = 0;
    let mut inactive = 0;
    let mut worst: f64 = 0.0;
    for (seed, scale, margin) in [
        (1u64, 0.5, 5.0),
        (2, 1.0, 0.3),
        (3, 1.5, 0.5),
        (4, 1.0, 1.0),
        (6, 0.8, 0.8),
    ] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let features: Vec<SparseFeatures> = (0..15)
            .map(|_| {
                let mut idx: Vec<u32> = (0..m).filter(|_| rng.gen_bool(0.3)).collect();
                if idx.is_empty() {
                    idx.push(rng.gen_range(0..m));
                }
                let raw: Vec<f64> = idx.iter().map(|_| rng.gen_range(0.2..2.0)).collect();
                let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
                SparseFeatures {
                    entries: idx
                        .into_iter()
                        .zip(raw.into_iter().map(|x| x / norm))
                        .collect(),
                }
            })
            .collect();
        let set = TrainingSet {
            features,
            triplets: (0..5).map(|t| [3 * t, 3 * t + 1, 3 * t + 2]).collect(),
        };
        let model = LinearEncoder::random(FeatureSpec::new(m, 9), d, scale, seed);
        let args: Vec<f64> = set
            .triplets
            .iter()
            .map(|&[a, p, n]| {
                let e = |i: usize| model.encode_features(&set.features[i]);
                euclid(&e(a), &e(p)) - euclid(&e(a), &e(n)) + margin
            })
            .collect();
        // finite differences are only meaningful away from the hinge kink
        if args.iter().any(|x| x.abs() < 1e-3) {
            continue;
        }
        active += args.iter().filter(|&&x| x > 0.0).count();
        inactive += args.iter().filter(|&&x| x < 0.0).count();
        let batch: Vec<usize> = (0..set.len()).collect();
        let (_, grad) = set.loss_and_gradient(&model, margin, &batch, true);
        for w in 0..model.weights().len() {
            let mut plus = model.clone();
            plus.weights_mut()[w] += h;
            let mut minus = model.clone();
            minus.weights_mut()[w] -= h;
            let numeric =
                (set.mean_loss(&plus, margin) - set.mean_loss(&minus, margin)) / (2.0 * h);
            let analytic = grad.get(&((w / d) as u32)).map_or(0.0, |row| row[w % d]);
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    ensure(active > 0 && inactive > 0, || {
        format!("{active} active / {inactive} inactive triplets checked")
    })?;
    ensure(worst < 1e-4, || format!("max relative error {worst:e}"))?;
    Ok(format!(
        "max relative error {worst:.1e} ({active} active, {inactive} inactive triplets)"
    ))
}

// 3. majority baseline

fn outcomes_with_truth(pro: usize, n: usize) -> Vec<PredictionOutcome> {
    (0..n)
        .map(|i| {
            let truth = if i < pro {
                Polarity::Pro
            } else {
                Polarity::Con
            };
            PredictionOutcome {
                user_id: format!("u{i}"),
                debate_id: "d".into(),
                category: None,
                history: 1,
                d_min: 1.0,
                d_max: 2.0,
                d_avg: 1.5,
                predicted: truth,
                truth,
                correct: true,
                tie: false,
            }
        })
        .collect()
}

fn majority_identity() -> Check {
    for (pro, n) in [
        (5324, 10_000),
        (6, 10),
        (751, 1000),
        (1, 1),
        (9999, 10_000),
        (30, 60),
    ] {
        let p = pro as f64 / n as f64;
        let r = baseline_majority(Polarity::Pro, &outcomes_with_truth(pro, n));
        ensure((r.accuracy - p).abs() < 1e-9, || {
            format!("p={p}: accuracy {}", r.accuracy)
        })?;
        ensure((r.macro_f1 - p / (1.0 + p)).abs() < 1e-9, || {
            format!("p={p}: macro-F1 {}", r.macro_f1)
        })?;
    }
    let r = baseline_majority(Polarity::Pro, &outcomes_with_truth(5324, 10_000));
    let pair = (format!("{:.4}", r.accuracy), format!("{:.4}", r.macro_f1));
    ensure(pair == ("0.5324".into(), "0.3474".into()), || {
        format!("got {pair:?}")
    })?;
    Ok(format!(
        "p=0.5324 gives accuracy {} / macro-F1 {}",
        pair.0, pair.1
    ))
}

// 4-6, 10. planted corpus

struct Planted {
    synthetic: Synthetic,
    runs: Vec<FoldRun>,
}

impl Planted {
    fn build() -> Result<Self, String> {
        let synthetic = generate_synthetic(&SynthConfig {
            n_users: 200,
            n_debates: 60,
            n_communities: 2,
            alignment: 0.95,
            noise: 0.05,
            seed: PLANTED_SEED,
            ..SynthConfig::default()
        })
        .map_err(|e| e.to_string())?;
        let config = PipelineConfig {
            seed: PLANTED_SEED,
            encoder: EncoderSource::Train(TrainConfig {
                epochs: 10,
                learning_rate: 0.2,
                buckets: 1 << 14,
                ..TrainConfig::default()
            }),
            ..PipelineConfig::default()
        };
        let runs = run_pipeline(&synthetic.corpus, Some(&synthetic.profiles), &config)
            .map_err(|e| e.to_string())?
            .into_iter()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        Ok(Self { synthetic, runs })
    }

    fn pooled(&self) -> Vec<PredictionOutcome> {
        self.runs
            .iter()
            .flat_map(|r| r.outcomes.iter().cloned())
            .collect()
    }
}

fn planted_end_to_end(planted: &Result<Planted, String>) -> Check {
    let planted = planted.as_ref().map_err(Clone::clone)?;
    let s = &planted.synthetic;
    let mut min_train_acc: f64 = 1.0;
    let mut min_ratio = f64::INFINITY;
    for run in &planted.runs {
        let fold = run.report.fold_index;
        let acc = run.report.train_eval.accuracy;
        ensure(acc > 0.90, || {
            format!("fold {fold}: train-triplet accuracy {acc:.4}")
        })?;
        min_train_acc = min_train_acc.min(acc);

        let mut members: Vec<Vec<&[f64]>> = vec![Vec::new(); 2];
        for e in &run.user_embeddings {
            members[s.labels.community[e.user.get()]].push(&e.vector);
        }
        let centroids: Vec<Vec<f64>> = members
            .iter()
            .map(|vs| {
                let mut c = vec![0.0; vs[0].len()];
                for v in vs {
                    for (a, x) in c.iter_mut().zip(*v) {
                        *a += x / vs.len() as f64;
                    }
                }
                c
            })
            .collect();
        let inter = euclid(&centroids[0], &centroids[1]);
        let (sum, count) = members
            .iter()
            .zip(&centroids)
            .fold((0.0, 0usize), |(s, n), (vs, c)| {
                (
                    s + vs.iter().map(|v| euclid(v, c)).sum::<f64>(),
                    n + vs.len(),
                )
            });
        let intra = sum / count as f64;
        ensure(inter > 2.0 * intra, || {
            format!("fold {fold}: inter {inter:.4} vs intra {intra:.4}")
        })?;
        min_ratio = min_ratio.min(inter / intra);
    }
    let aligned: BTreeSet<&str> = s
        .corpus
        .debates()
        .iter()
        .zip(&s.labels.aligned)
        .filter(|(_, &a)| a)
        .map(|(d, _)| d.debate_id.as_str())
        .collect();
    let on_aligned: Vec<PredictionOutcome> = planted
        .pooled()
        .into_iter()
        .filter(|o| aligned.contains(o.debate_id.as_str()))
        .collect();
    let acc = predict::metrics(&on_aligned).accuracy;
    ensure(acc > 0.70, || {
        format!("pooled accuracy on aligned test debates {acc:.4}")
    })?;
    Ok(format!(
        "(a) min fold train-triplet accuracy {min_train_acc:.4}; (b) min inter/intra {min_ratio:.2}; (c) accuracy {acc:.4} on {} outcomes",
        on_aligned.len()
    ))
}

fn dstar_monotonicity(planted: &Result<Planted, String>) -> Check {
    let planted = planted.as_ref().map_err(Clone::clone)?;
    let test = slope_permutation_test(
        &planted.pooled(),
        &DstarBinning::default(),
        1000,
        PLANTED_SEED,
    );
    ensure(test.observed > 0.0 && test.p_value < 0.05, || {
        format!("slope {:.4}, p {:.4}", test.observed, test.p_value)
    })?;
    Ok(format!(
        "slope {:.4}, one-sided p {:.4} over 1000 permutations",
        test.observed, test.p_value
    ))
}

fn distance_signs(planted: &Result<Planted, String>) -> Check {
    let planted = planted.as_ref().map_err(Clone::clone)?;
    let pooled = planted.pooled();
    let trend = |f: fn(&PredictionOutcome) -> f64| -> Result<f64, String> {
        let bins = bin_accuracy(pooled.iter().map(|o| (f(o), o.correct)), 1.0)
            .map_err(|e| e.to_string())?;
        bin_trend(&bins, 5).map_err(|e| e.to_string())
    };
    let (near, far) = (trend(|o| o.d_min)?, trend(|o| o.d_max)?);
    ensure(near <= 0.0 && far >= 0.0, || {
        format!("Spearman d_min {near:.4}, d_max {far:.4}")
    })?;
    Ok(format!(
        "Spearman over bins: d_min {near:.4}, d_max {far:.4}"
    ))
}

fn leak_guard(planted: &Result<Planted, String>) -> Check {
    let planted = planted.as_ref().map_err(Clone::clone)?;
    let corpus: &Corpus = &planted.synthetic.corpus;
    let mut scanned = (0usize, 0usize);
    let mut sensitive = 0usize;
    for run in &planted.runs {
        let fold = run.report.fold_index;
        let test_ids: BTreeSet<&str> = run
            .outcomes
            .iter()
            .map(|o| o.debate_id.as_str())
            .chain(
                run.test_triplets
                    .iter()
                    .map(|t| corpus.debate(t.anchor.debate).debate_id.as_str()),
            )
            .collect();
        let is_test = |d: DebateIdx| test_ids.contains(corpus.debate(d).debate_id.as_str());
        for t in &run.train_triplets {
            for k in [t.anchor, t.positive, t.negative] {
                ensure(!is_test(k.debate), || {
                    format!(
                        "fold {fold}: test debate {} in a train triplet",
                        corpus.debate(k.debate).debate_id
                    )
                })?;
            }
        }
        for &d in &run.embedding_debates {
            ensure(!is_test(d), || {
                format!(
                    "fold {fold}: test debate {} in a user embedding",
                    corpus.debate(d).debate_id
                )
            })?;
        }
        let mean_of = |keys: &[BeliefKey], dim: usize| -> Result<Vec<f64>, String> {
            let mut mean = vec![0.0; dim];
            for k in keys {
                let v = run
                    .model
                    .encode(&corpus.statement(*k))
                    .map_err(|err| err.to_string())?;
                for (a, x) in mean.iter_mut().zip(v) {
                    *a += x / keys.len() as f64;
                }
            }
            Ok(mean)
        };
        // recompute every user embedding from the user's non-test votes only
        for e in &run.user_embeddings {
            let votes = corpus.user_votes(e.user);
            let train: Vec<BeliefKey> = votes
                .iter()
                .filter(|v| !is_test(v.debate))
                .map(|v| v.key())
                .collect();
            ensure(train.len() == e.support, || {
                format!("fold {fold}: support mismatch")
            })?;
            let gap = euclid(&mean_of(&train, e.vector.len())?, &e.vector);
            ensure(gap < 1e-12, || {
                format!(
                    "fold {fold}: embedding of {} is {gap:e} from the train-only recomputation",
                    corpus.user_id(e.user)
                )
            })?;
            if train.len() < votes.len() {
                let all: Vec<BeliefKey> = votes.iter().map(|v| v.key()).collect();
                if euclid(&mean_of(&all, e.vector.len())?, &e.vector) > 1e-6 {
                    sensitive += 1;
                }
            }
        }
        scanned.0 += run.train_triplets.len();
        scanned.1 += run.user_embeddings.len();
    }
    // the recomputation must be able to tell a leaking embedding apart
    ensure(sensitive > 0, || {
        "no embedding would change if test votes leaked".into()
    })?;
    Ok(format!(
        "{} train triplets and {} user embeddings clean across 5 folds; {sensitive} would differ with test votes",
        scanned.0, scanned.1
    ))
}

// 7. PCA

fn pca_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_eig, mut worst_angle, mut worst_iso): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..50 {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|_| {
                (0..6)
                    .map(|j| rng.gen_range(-1.0..1.0) * (j + 1) as f64)
                    .collect()
            })
            .collect();
        let fit = fit_pca(&rows, 6).map_err(|e| e.to_string())?;
        let x = DMatrix::from_fn(20, 6, |i, j| rows[i][j]);
        let mean = x.row_mean();
        let centered = DMatrix::from_fn(20, 6, |i, j| x[(i, j)] - mean[j]);
        let eig = SymmetricEigen::new(centered.transpose() * &centered / 19.0);
        let mut order: Vec<usize> = (0..6).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        for (k, &o) in order.iter().enumerate() {
            worst_eig = worst_eig.max((fit.eigenvalues[k] - eig.eigenvalues[o]).abs());
            let v: Vec<f64> = eig.eigenvectors.column(o).iter().copied().collect();
            let c: f64 = fit.components[k].iter().zip(&v).map(|(a, b)| a * b).sum();
            let sin = fit.components[k]
                .iter()
                .zip(&v)
                .map(|(a, b)| (b - c * a).powi(2))
                .sum::<f64>()
                .sqrt();
            worst_angle = worst_angle.max(sin);
        }
        let proj: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| fit.project(r))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        for i in 0..20 {
            for j in (i + 1)..20 {
                worst_iso =
                    worst_iso.max((euclid(&rows[i], &rows[j]) - euclid(&proj[i], &proj[j])).abs());
            }
        }
    }
    ensure(
        worst_eig < 1e-8 && worst_angle < 1e-6 && worst_iso < 1e-8,
        || format!("eigenvalue {worst_eig:e}, angle {worst_angle:e}, isometry {worst_iso:e}"),
    )?;
    Ok(format!(
        "50 matrices: eigenvalue err {worst_eig:.1e}, sin angle {worst_angle:.1e}, distance err {worst_iso:.1e}"
    ))
}

// 8. correlation

fn brute_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Average rank by counting: 1 + #smaller + (#ties - 1) / 2.
fn counting_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|a| {
            let less = x.iter().filter(|b| *b < a).count() as f64;
            let equal = x.iter().filter(|b| *b == a).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

fn correlation_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 100 {
        let n = rng.gen_range(3..=10);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64 * 0.5).collect();
        let (rx, ry) = (counting_ranks(&x), counting_ranks(&y));
        let (bp, bs) = (brute_pearson(&x, &y), brute_pearson(&rx, &ry));
        if !(bp.is_finite() && bs.is_finite()) {
            continue;
        }
        let p = pearson(&x, &y).map_err(|e| e.to_string())?;
        let s = spearman(&x, &y).map_err(|e| e.to_string())?;
        worst = worst.max((p - bp).abs()).max((s - bs).abs());
        done += 1;
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    let up = [1.0, 2.0, 3.0, 4.0, 10.0];
    let squares: Vec<f64> = up.iter().map(|v| v * v).collect();
    let down: Vec<f64> = up.iter().map(|v| -v * v * v).collect();
    let (a, b) = (
        spearman(&up, &squares).map_err(|e| e.to_string())?,
        spearman(&up, &down).map_err(|e| e.to_string())?,
    );
    let c = pearson(&up, &up.map(|v| 3.0 * v - 1.0)).map_err(|e| e.to_string())?;
    ensure(a == 1.0 && b == -1.0 && (c - 1.0).abs() < 1e-15, || {
        format!("monotone cases gave {a}, {b}, {c}")
    })?;
    Ok(format!(
        "100 tied series, max deviation {worst:.1e}; monotone cases +1/-1"
    ))
}

// 9. determinism

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(dir)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn cli(args: &[&str]) -> Result<(), String> {
    let mut argv = vec!["beliefspace".to_owned()];
    argv.extend(args.iter().map(|s| s.to_string()));
    match beliefspace::cli::run(argv) {
        0 => Ok(()),
        code => Err(format!("`{}` exited with {code}", args.join(" "))),
    }
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| tmp.path().join(name).to_string_lossy().into_owned();
    let seed = PLANTED_SEED.to_string();
    cli(&[
        "synth",
        "--users",
        "200",
        "--debates",
        "60",
        "--seed",
        &seed,
        "--out",
        &p("data"),
    ])?;
    let (debates, votes, profiles) = (
        p("data/debates.jsonl"),
        p("data/votes.csv"),
        p("data/profiles.jsonl"),
    );
    let mut trees = Vec::new();
    for (out, threads) in [("run_a", "1"), ("run_b", "4")] {
        cli(&[
            "eval",
            "--debates",
            &debates,
            "--votes",
            &votes,
            "--profiles",
            &profiles,
            "--seed",
            &seed,
            "--lr",
            "0.2",
            "--buckets",
            "16384",
            "--threads",
            threads,
            "--out",
            &p(out),
        ])?;
        trees.push((
            tree(&tmp.path().join(out)),
            read_manifest(&tmp.path().join(out)).map_err(|e| e.to_string())?,
        ));
    }
    let ((a, ma), (b, mb)) = (&trees[0], &trees[1]);
    ensure(a.keys().eq(b.keys()), || "artifact sets differ".into())?;
    for (name, bytes) in a {
        ensure(b[name] == *bytes, || {
            format!("{name} differs between 1 and 4 threads")
        })?;
    }
    ensure(ma.fingerprint() == mb.fingerprint(), || {
        "manifest hashes differ".into()
    })?;
    let artifacts = a
        .keys()
        .filter(|k| k.ends_with(".csv") || k.ends_with(".json"))
        .count();
    ensure(artifacts > 50, || {
        format!("only {artifacts} CSV/JSON artifacts")
    })?;
    Ok(format!(
        "{artifacts} CSV/JSON artifacts byte-identical at 1 and 4 threads; manifest {}",
        &ma.fingerprint()[..16]
    ))
}

#[test]
fn acceptance() {
    let secs = Duration::from_secs;
    let mut lines = vec![
        run(1, "loss correctness", Some(secs(1)), loss_correctness),
        run(2, "gradient check", Some(secs(5)), gradient_check),
        run(3, "majority-baseline identity", None, majority_identity),
    ];
    let start = Instant::now();
    let planted =
        catch_unwind(Planted::build).unwrap_or_else(|_| Err("planted pipeline panicked".into()));
    let build_time = start.elapsed();
    let mut l4 = run(4, "planted end-to-end", None, || {
        planted_end_to_end(&planted)
    });
    l4.elapsed += build_time;
    if l4.result.is_ok() && l4.elapsed > secs(120) {
        l4.result = Err(format!("took {:.2?}, limit 120s", l4.elapsed));
    }
    lines.push(l4);
    lines.push(run(5, "d* monotonicity", Some(secs(30)), || {
        dstar_monotonicity(&planted)
    }));
    lines.push(run(6, "distance-response signs", Some(secs(10)), || {
        distance_signs(&planted)
    }));
    lines.push(run(7, "PCA oracle", Some(secs(10)), pca_oracle));
    lines.push(run(8, "correlation oracles", None, correlation_oracles));
    lines.push(run(9, "determinism", None, determinism));
    lines.push(run(10, "leak guard", None, || leak_guard(&planted)));

    let mut failed = 0;
    for l in &lines {
        let (tag, detail) = match &l.result {
            Ok(d) => ("PASS", d.clone()),
            Err(e) => {
                failed += 1;
                ("FAIL", e.clone())
            }
        };
        // bypass the test harness capture so the verdicts always reach the log
        let _ = writeln!(
            std::io::stdout().lock(),
            "criterion {:>2} {tag} {} [{:.2?}]: {detail}",
            l.id,
            l.name,
            l.elapsed
        );
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
