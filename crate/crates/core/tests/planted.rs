use std::collections::BTreeSet;

use beliefspace_core::corpus::{make_folds, Corpus, Debate, RawPolarity, RawVote};
use beliefspace_core::dissonance::{category_dstar_correlation, group_compare, DstarBinning};
use beliefspace_core::encoder::{train, EncoderModel, StatementVectors, TrainConfig};
use beliefspace_core::evalkit::{run_pipeline, EncoderSource, PipelineConfig};
use beliefspace_core::predict::{self, baseline_majority, baseline_random, PredictionOutcome};
use beliefspace_core::profile::{Grouping, Party, Profiles};
use beliefspace_core::space::{polarization, user_embeddings, UserEmbedding};
use beliefspace_core::stats::spearman;
use beliefspace_core::synth::{generate_synthetic, issue_name, SynthConfig, Synthetic};
use beliefspace_core::triplets::{sample_triplets, CoocTable, SamplingConfig};
use beliefspace_core::{Polarity, UserIdx};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn planted_train() -> TrainConfig {
    TrainConfig {
        learning_rate: 0.2,
        buckets: 1 << 14,
        ..TrainConfig::default()
    }
}

/// Encoder trained on every triplet, then one embedding per user over all debates.
fn embed_all(s: &Synthetic, seed: u64) -> Vec<UserEmbedding> {
    let triplets = sample_triplets(
        &CoocTable::build(&s.corpus),
        &s.corpus,
        &SamplingConfig::default(),
        seed,
    )
    .triplets;
    let model = EncoderModel::Trained(
        train(
            &triplets,
            &s.corpus,
            &TrainConfig {
                seed,
                ..planted_train()
            },
        )
        .unwrap()
        .model,
    );
    let users: Vec<UserIdx> = (0..s.corpus.n_users() as u32).map(UserIdx).collect();
    user_embeddings(
        &mut StatementVectors::new(&model, &s.corpus),
        &s.corpus,
        &users,
        None,
    )
    .unwrap()
    .embeddings
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn mean_of(vs: &[&[f64]]) -> Vec<f64> {
    let mut m = vec![0.0; vs[0].len()];
    for v in vs {
        for (s, x) in m.iter_mut().zip(*v) {
            *s += x / vs.len() as f64;
        }
    }
    m
}

/// 99th percentile of centroid distances between random splits of the given sizes.
fn null_percentile(embeddings: &[UserEmbedding], n_a: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..embeddings.len()).collect();
    let mut draws: Vec<f64> = (0..200)
        .map(|_| {
            idx.shuffle(&mut rng);
            let a: Vec<&[f64]> = idx[..n_a]
                .iter()
                .map(|&i| embeddings[i].vector.as_slice())
                .collect();
            let b: Vec<&[f64]> = idx[n_a..]
                .iter()
                .map(|&i| embeddings[i].vector.as_slice())
                .collect();
            dist(&mean_of(&a), &mean_of(&b))
        })
        .collect();
    draws.sort_by(f64::total_cmp);
    draws[197]
}

#[test]
fn planted_issues_polarize_users() {
    let s = generate_synthetic(&SynthConfig {
        seed: 21,
        ..SynthConfig::default()
    })
    .unwrap();
    let emb = embed_all(&s, 21);
    let records: Vec<_> = (0..6)
        .map(|i| polarization(&emb, &s.corpus, &s.profiles, &issue_name(i)).unwrap())
        .collect();
    let strongest = records.last().unwrap();
    let null = null_percentile(&emb, strongest.n_pro, 5);
    assert!(
        strongest.euclid > null,
        "{} vs null {null}",
        strongest.euclid
    );
    let euclid: Vec<f64> = records.iter().map(|r| r.euclid).collect();
    let cosine: Vec<f64> = records.iter().map(|r| r.cosine).collect();
    let rho = spearman(&euclid, &cosine).unwrap();
    assert!(rho > 0.8, "rho {rho}: {euclid:?} {cosine:?}");
}

#[test]
fn single_community_has_no_polarization() {
    let s = generate_synthetic(&SynthConfig {
        n_communities: 1,
        seed: 21,
        ..SynthConfig::default()
    })
    .unwrap();
    let emb = embed_all(&s, 21);
    let r = polarization(&emb, &s.corpus, &s.profiles, &issue_name(5)).unwrap();
    let null = null_percentile(&emb, r.n_pro, 5);
    assert!(r.euclid <= null, "{} vs null {null}", r.euclid);
}

fn outcome(
    i: usize,
    predicted: Polarity,
    truth: Polarity,
    d_min: f64,
    d_max: f64,
) -> PredictionOutcome {
    PredictionOutcome {
        user_id: format!("u{i}"),
        debate_id: format!("d{i}"),
        category: None,
        history: 1,
        d_min,
        d_max,
        d_avg: (d_min + d_max) / 2.0,
        predicted,
        truth,
        correct: predicted == truth,
        tie: false,
    }
}

#[test]
fn random_baseline_is_a_coin() {
    let outcomes: Vec<_> = (0..10_000)
        .map(|i| {
            let t = Polarity::BOTH[(i * 7 / 3) % 2];
            outcome(i, t, t, 1.0, 2.0)
        })
        .collect();
    for seed in [0, 1, 2] {
        let acc = baseline_random(&outcomes, seed).accuracy;
        assert!((acc - 0.5).abs() <= 0.015, "accuracy {acc}");
    }
}

#[test]
fn majority_baseline_on_skewed_truth() {
    let outcomes: Vec<_> = (0..10_000)
        .map(|i| {
            let t = if i < 5324 {
                Polarity::Pro
            } else {
                Polarity::Con
            };
            outcome(i, t, t, 1.0, 2.0)
        })
        .collect();
    let m = baseline_majority(Polarity::Pro, &outcomes);
    assert!((m.accuracy - 0.5324).abs() < 1e-12);
    assert!(
        (m.macro_f1 - 0.3474).abs() < 5e-5,
        "macro-F1 {}",
        m.macro_f1
    );
    assert_eq!(m.con.f1, 0.0);
}

fn pooled_outcomes(cfg: &SynthConfig, seed: u64) -> (Synthetic, Vec<PredictionOutcome>) {
    let s = generate_synthetic(cfg).unwrap();
    let config = PipelineConfig {
        seed,
        encoder: EncoderSource::Train(planted_train()),
        permutations: 10,
        ..PipelineConfig::default()
    };
    let outcomes = run_pipeline(&s.corpus, Some(&s.profiles), &config)
        .unwrap()
        .into_iter()
        .flat_map(|r| r.unwrap().outcomes)
        .collect();
    (s, outcomes)
}

#[test]
fn equidistant_calls_are_near_chance() {
    let (_, outcomes) = pooled_outcomes(
        &SynthConfig {
            seed: 8,
            ..SynthConfig::default()
        },
        8,
    );
    let binning = DstarBinning::default();
    let low: Vec<bool> = outcomes
        .iter()
        .filter(|o| o.d_star().is_some_and(|d| binning.index(d) == 0))
        .map(|o| o.correct)
        .collect();
    let n = low.len() as f64;
    assert!(n >= 30.0, "only {n} low-d* outcomes");
    let acc = low.iter().filter(|&&c| c).count() as f64 / n;
    let sigma = (0.25 / n).sqrt();
    assert!((acc - 0.5).abs() < 4.0 * sigma, "accuracy {acc} over {n}");
    let overall = predict::metrics(&outcomes).accuracy;
    assert!(overall > acc + 0.2, "overall {overall} vs low bucket {acc}");
}

/// Outcomes whose correctness rises with d*, in categories whose d* ranges differ.
#[test]
fn tighter_categories_have_higher_dissonance_and_f1() {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ranges = [
        ("diffuse", 0.0, 0.3),
        ("middle", 0.3, 0.7),
        ("tight", 0.7, 1.2),
    ];
    let mut outcomes = Vec::new();
    for (name, lo, hi) in ranges {
        for i in 0..2000 {
            let d_star: f64 = rng.gen_range(lo..hi);
            let truth = Polarity::BOTH[i % 2];
            let correct = rng.gen::<f64>() < 0.5 + 0.4 * d_star.min(1.0);
            let predicted = if correct { truth } else { truth.opposite() };
            let mut o = outcome(i, predicted, truth, 1.0, 1.0 + d_star);
            o.category = Some(name.into());
            outcomes.push(o);
        }
    }
    let corr = category_dstar_correlation(&outcomes).unwrap();
    assert_eq!(corr.rows.len(), 3);
    assert!(corr.pearson > 0.0, "{corr:?}");
}

#[test]
fn swapping_groups_flips_every_statistic() {
    let (s, outcomes) = pooled_outcomes(
        &SynthConfig {
            seed: 4,
            ..SynthConfig::default()
        },
        4,
    );
    let mut swapped: Profiles = s.profiles.clone();
    for p in swapped.values_mut() {
        p.party = match p.party {
            Some(Party::Democratic) => Some(Party::Republican),
            Some(Party::Republican) => Some(Party::Democratic),
            ref other => other.clone(),
        };
    }
    let binning = DstarBinning::default();
    let a = group_compare(&outcomes, &s.profiles, Grouping::Party, &binning).unwrap();
    let b = group_compare(&outcomes, &swapped, Grouping::Party, &binning).unwrap();
    assert_eq!(a.curves[0], b.curves[1]);
    let mut tested = 0;
    for (x, y) in a.tests.iter().zip(&b.tests) {
        assert_eq!(x.n, [y.n[1], y.n[0]]);
        match (&x.welch, &y.welch) {
            (Some(x), Some(y)) => {
                assert!((x.t + y.t).abs() < 1e-12);
                assert!((x.p_value - y.p_value).abs() < 1e-12);
                tested += 1;
            }
            (None, None) => {}
            _ => panic!("asymmetric skip"),
        }
    }
    assert!(tested > 0);
}

#[test]
fn fold_without_evaluable_users() {
    // every user votes once, so no one has both train and test history
    let debates: Vec<Debate> = (0..4)
        .map(|j| Debate {
            debate_id: format!("d{j}"),
            title: format!("topic {j}"),
            category: None,
        })
        .collect();
    let votes: Vec<RawVote> = (0..8)
        .map(|u| RawVote {
            user_id: format!("u{u}"),
            debate_id: format!("d{}", u % 4),
            polarity: RawPolarity::Pro,
        })
        .collect();
    let (corpus, _) = Corpus::from_records(debates, votes, &BTreeSet::new()).unwrap();
    let model = EncoderModel::Trained(beliefspace_core::encoder::LinearEncoder::random(
        planted_train().feature_spec(),
        4,
        0.1,
        0,
    ));
    for fold in make_folds(&corpus, 2, 0).unwrap() {
        let fo = predict::run_fold(&model, &corpus, &fold).unwrap();
        assert!(fo.outcomes.is_empty());
        assert_eq!(predict::metrics(&fo.outcomes).n, 0);
    }
}
