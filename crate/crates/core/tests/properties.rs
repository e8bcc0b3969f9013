use std::collections::BTreeSet;

use beliefspace_core::corpus::{
    make_folds, render_statement, BeliefKey, Corpus, Debate, RawPolarity, RawVote,
};
use beliefspace_core::dissonance::{accuracy_vs_dstar, d_star, DstarBinning};
use beliefspace_core::encoder::{
    featurize, train, triplet_loss, EncoderModel, FeatureSpec, LinearEncoder, SparseFeatures,
    StatementVectors, TrainConfig,
};
use beliefspace_core::evalkit::{eval_triplet_vectors, Split};
use beliefspace_core::predict::{distance_response, metrics, PredictionOutcome};
use beliefspace_core::space::user_embeddings;
use beliefspace_core::triplets::{sample_triplets, CoocTable, SamplingConfig};
use beliefspace_core::{DebateIdx, Polarity, UserIdx};
use proptest::prelude::*;

fn build(n_debates: usize, votes: &[(u8, u8, bool)]) -> Corpus {
    let debates = (0..n_debates)
        .map(|j| Debate {
            debate_id: format!("d{j}"),
            title: format!("topic {} number {j}", ["war", "tax", "god"][j % 3]),
            category: Some(["a", "b"][j % 2].into()),
        })
        .collect();
    let raw = votes.iter().map(|&(u, d, pro)| RawVote {
        user_id: format!("u{u}"),
        debate_id: format!("d{}", d as usize % n_debates),
        polarity: if pro {
            RawPolarity::Pro
        } else {
            RawPolarity::Con
        },
    });
    Corpus::from_records(debates, raw, &BTreeSet::new())
        .unwrap()
        .0
}

fn corpus_strategy() -> impl Strategy<Value = Corpus> {
    (2usize..9).prop_flat_map(|n| {
        prop::collection::vec((0u8..12, 0u8..32, any::<bool>()), 1..80)
            .prop_map(move |v| build(n, &v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn triplets_satisfy_invariants(corpus in corpus_strategy(), seed in any::<u64>(), force in any::<bool>()) {
        let cooc = CoocTable::build(&corpus);
        let config = SamplingConfig { force_opposite: force, ..SamplingConfig::default() };
        let sampled = sample_triplets(&cooc, &corpus, &config, seed);
        let mut per_anchor = std::collections::BTreeMap::new();
        for t in &sampled.triplets {
            prop_assert_ne!(t.positive, t.anchor);
            prop_assert_ne!(t.negative, t.positive);
            prop_assert!(cooc.count(t.anchor, t.positive) > 0);
            let opp = t.anchor.opposite();
            prop_assert!(t.negative == opp || cooc.count(t.negative, opp) > 0);
            *per_anchor.entry(t.anchor).or_insert(0usize) += 1;
        }
        prop_assert!(per_anchor.values().all(|&c| c <= 25));
        prop_assert_eq!(sampled.report.anchors_used, per_anchor.len());
        let again = sample_triplets(&cooc, &corpus, &config, seed);
        prop_assert_eq!(sampled.triplets, again.triplets);
    }

    #[test]
    fn cooc_matches_brute_force(corpus in corpus_strategy()) {
        let cooc = CoocTable::build(&corpus);
        let keys: Vec<BeliefKey> = (0..corpus.n_debates() * 2).map(BeliefKey::from_id).collect();
        for &a in &keys {
            prop_assert_eq!(cooc.count(a, a.opposite()), 0);
            for &b in &keys {
                if a == b { continue; }
                let brute = (0..corpus.n_users())
                    .filter(|&u| {
                        let held: Vec<BeliefKey> = corpus.user_votes(UserIdx(u as u32)).iter().map(|v| v.key()).collect();
                        held.contains(&a) && held.contains(&b)
                    })
                    .count() as u32;
                prop_assert_eq!(cooc.count(a, b), brute);
                prop_assert_eq!(cooc.count(a, b), cooc.count(b, a));
            }
        }
    }

    #[test]
    fn train_only_triplets_never_touch_test_debates(corpus in corpus_strategy(), seed in any::<u64>()) {
        let folds = make_folds(&corpus, 2, seed).unwrap();
        for fold in &folds {
            let train_corpus = corpus.restrict(&fold.train_mask());
            let sampled = sample_triplets(&CoocTable::build(&train_corpus), &train_corpus, &SamplingConfig::default(), seed);
            for t in &sampled.triplets {
                for k in [t.anchor, t.positive, t.negative] {
                    prop_assert!(!fold.is_test(k.debate));
                }
            }
        }
    }

    #[test]
    fn folds_partition_debates(seed in any::<u64>(), k in 2usize..=10) {
        let votes: Vec<(u8, u8, bool)> = (0..100u8).map(|j| (j % 7, j, j % 3 == 0)).collect();
        let corpus = build(100, &votes);
        let folds = make_folds(&corpus, k, seed).unwrap();
        let mut seen = vec![0usize; 100];
        for f in &folds {
            let size = f.test_debates.len() as f64;
            prop_assert!((size - 100.0 / k as f64).abs() <= 1.0);
            let train: BTreeSet<DebateIdx> = f.train_debates.iter().copied().collect();
            prop_assert_eq!(train.len() + f.test_debates.len(), 100);
            for d in &f.test_debates {
                prop_assert!(!train.contains(d));
                seen[d.get()] += 1;
            }
            for &u in &f.evaluable_users {
                let votes = corpus.user_votes(u);
                prop_assert!(votes.iter().any(|v| f.is_test(v.debate)) && votes.iter().any(|v| !f.is_test(v.debate)));
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        prop_assert_eq!(make_folds(&corpus, k, seed).unwrap(), folds);
    }

    #[test]
    fn loss_is_nonnegative_and_zero_exactly_past_margin(
        a in prop::collection::vec(-5.0..5.0f64, 3),
        p in prop::collection::vec(-5.0..5.0f64, 3),
        n in prop::collection::vec(-5.0..5.0f64, 3),
        margin in 0.01..8.0f64,
    ) {
        let l = triplet_loss(&a, &p, &n, margin).unwrap();
        prop_assert!(l >= 0.0);
        let dist = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        prop_assert_eq!(l == 0.0, dist(&a, &n) >= dist(&a, &p) + margin);
    }

    #[test]
    fn trained_encoder_is_linear_in_features(
        seed in any::<u64>(),
        f in prop::collection::btree_map(0u32..32, -2.0..2.0f64, 1..8),
        g in prop::collection::btree_map(0u32..32, -2.0..2.0f64, 1..8),
        alpha in -3.0..3.0f64,
        beta in -3.0..3.0f64,
    ) {
        let model = LinearEncoder::random(FeatureSpec::new(32, 1), 3, 1.0, seed);
        let sparse = |m: &std::collections::BTreeMap<u32, f64>| SparseFeatures { entries: m.iter().map(|(&k, &v)| (k, v)).collect() };
        let mut combined = std::collections::BTreeMap::new();
        for (&k, &v) in &f { *combined.entry(k).or_insert(0.0) += alpha * v; }
        for (&k, &v) in &g { *combined.entry(k).or_insert(0.0) += beta * v; }
        let lhs = model.encode_features(&sparse(&combined));
        let (ef, eg) = (model.encode_features(&sparse(&f)), model.encode_features(&sparse(&g)));
        for i in 0..3 {
            prop_assert!((lhs[i] - (alpha * ef[i] + beta * eg[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn user_embeddings_ignore_vote_order(
        votes in prop::collection::vec((0u8..6, 0u8..6, any::<bool>()), 1..40),
        rotate in 0usize..40,
    ) {
        let mut shuffled = votes.clone();
        let r = rotate % shuffled.len();
        shuffled.rotate_left(r);
        shuffled.reverse();
        // last-write-wins on duplicates would make order matter; keep one vote per pair
        let mut seen = BTreeSet::new();
        let unique: Vec<_> = votes.iter().copied().filter(|&(u, d, _)| seen.insert((u, d % 6))).collect();
        let keep: BTreeSet<_> = unique.iter().copied().collect();
        let mut seen = BTreeSet::new();
        let reordered: Vec<_> = shuffled.into_iter().filter(|v| keep.contains(v) && seen.insert((v.0, v.1 % 6))).collect();
        let (c1, c2) = (build(6, &unique), build(6, &reordered));
        let model = EncoderModel::Trained(LinearEncoder::random(FeatureSpec::new(64, 3), 4, 1.0, 5));
        let users: Vec<UserIdx> = (0..c1.n_users() as u32).map(UserIdx).collect();
        let e1 = user_embeddings(&mut StatementVectors::new(&model, &c1), &c1, &users, None).unwrap();
        let e2 = user_embeddings(&mut StatementVectors::new(&model, &c2), &c2, &users, None).unwrap();
        prop_assert_eq!(e1, e2);
    }

    #[test]
    fn d_star_is_scale_invariant(d_min in 0.01..50.0f64, gap in 0.0..50.0f64, c in 0.001..1000.0f64) {
        let base = d_star(d_min, d_min + gap).unwrap().unwrap();
        let scaled = d_star(c * d_min, c * (d_min + gap)).unwrap().unwrap();
        prop_assert!((base - scaled).abs() <= 1e-12 * base.max(1.0));
    }

    #[test]
    fn triplet_accuracy_survives_isometries(
        points in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 3), 6..30),
        angles in prop::collection::vec(-3.1..3.1f64, 3),
        shift in prop::collection::vec(-10.0..10.0f64, 3),
    ) {
        let n = points.len() / 3;
        let rows: Vec<[&[f64]; 3]> = (0..n).map(|i| [&points[3 * i][..], &points[3 * i + 1][..], &points[3 * i + 2][..]]).collect();
        let dist = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        // near-ties could flip under rounding
        prop_assume!(rows.iter().all(|[a, p, q]| (dist(a, p) - dist(a, q)).abs() > 1e-9));
        let before = eval_triplet_vectors(rows.iter().map(|[a, p, q]| (*a, *p, *q)), Split::Train).unwrap();
        let moved: Vec<Vec<f64>> = points.iter().map(|v| {
            let mut w = v.clone();
            for (axis, &t) in angles.iter().enumerate() {
                let (i, j) = (axis, (axis + 1) % 3);
                let (c, s) = (t.cos(), t.sin());
                let (x, y) = (w[i], w[j]);
                w[i] = c * x - s * y;
                w[j] = s * x + c * y;
            }
            w.iter().zip(&shift).map(|(x, s)| x + s).collect()
        }).collect();
        let after = eval_triplet_vectors((0..n).map(|i| (&moved[3 * i][..], &moved[3 * i + 1][..], &moved[3 * i + 2][..])), Split::Train).unwrap();
        prop_assert_eq!(before.correct, after.correct);
    }

    #[test]
    fn binned_accuracy_aggregates_to_overall(
        rows in prop::collection::vec((0.0..6.0f64, 0.0..6.0f64, any::<bool>(), any::<bool>()), 1..200),
        width in 0.05..2.0f64,
    ) {
        let outcomes: Vec<PredictionOutcome> = rows.iter().map(|&(a, gap, pred_pro, truth_pro)| {
            let pol = |b: bool| if b { Polarity::Pro } else { Polarity::Con };
            PredictionOutcome {
                user_id: "u".into(), debate_id: "d".into(), category: None, history: 1,
                d_min: a, d_max: a + gap, d_avg: a + gap / 2.0,
                predicted: pol(pred_pro), truth: pol(truth_pro), correct: pred_pro == truth_pro, tie: false,
            }
        }).collect();
        let overall = metrics(&outcomes);
        let resp = distance_response(&outcomes, width).unwrap();
        for curve in [&resp.d_min, &resp.d_max, &resp.d_avg] {
            let n: usize = curve.iter().map(|b| b.n).sum();
            let c: usize = curve.iter().map(|b| b.correct).sum();
            prop_assert_eq!(n, outcomes.len());
            prop_assert!((c as f64 / n as f64 - overall.accuracy).abs() < 1e-12);
        }
        let ds = accuracy_vs_dstar(&outcomes, &DstarBinning::default());
        let n: usize = ds.bins.iter().map(|b| b.n).sum();
        prop_assert_eq!(n + ds.excluded, outcomes.len());
        let defined: Vec<&PredictionOutcome> = outcomes.iter().filter(|o| o.d_min > 0.0).collect();
        if !defined.is_empty() {
            let c: usize = ds.bins.iter().map(|b| b.correct).sum();
            let expected = defined.iter().filter(|o| o.correct).count();
            prop_assert_eq!(c, expected);
        }
    }

    #[test]
    fn opposite_is_an_involution(id in 0usize..10_000) {
        let k = BeliefKey::from_id(id);
        prop_assert_eq!(k.opposite().opposite(), k);
        prop_assert_ne!(k.opposite(), k);
        prop_assert_eq!(k.id(), id);
    }

    #[test]
    fn statements_are_injective(a in "[a-z ]{0,12}[a-z]", b in "[a-z ]{0,12}[a-z]") {
        for pa in Polarity::BOTH {
            for pb in Polarity::BOTH {
                let same = render_statement(&a, pa).unwrap() == render_statement(&b, pb).unwrap();
                prop_assert_eq!(same, a == b && pa == pb);
            }
        }
    }

    #[test]
    fn featurize_is_normalized_and_pure(text in "[A-Za-z0-9 ,.!?]{0,40}") {
        let spec = FeatureSpec::new(1 << 10, 77);
        match featurize(&text, &spec) {
            Ok(f) => {
                prop_assert!((f.norm() - 1.0).abs() < 1e-12);
                prop_assert!(f.entries.windows(2).all(|w| w[0].0 < w[1].0));
                prop_assert_eq!(featurize(&text, &spec).unwrap(), f);
            }
            Err(_) => prop_assert!(!text.chars().any(|c| c.is_ascii_alphanumeric())),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn training_is_deterministic(corpus in corpus_strategy(), seed in any::<u64>()) {
        let sampled = sample_triplets(&CoocTable::build(&corpus), &corpus, &SamplingConfig::default(), seed);
        prop_assume!(!sampled.triplets.is_empty());
        let config = TrainConfig { dim: 4, buckets: 64, epochs: 3, batch_size: 4, seed, ..TrainConfig::default() };
        let a = train(&sampled.triplets, &corpus, &config).unwrap();
        let b = train(&sampled.triplets, &corpus, &config).unwrap();
        prop_assert_eq!(&a.loss_trace, &b.loss_trace);
        prop_assert_eq!(a.model, b.model);
    }
}
