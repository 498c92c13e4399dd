use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use expertbench::corpus::{
    build_dataset, load_dataset, parse_aminer, preprocess, save_dataset, Candidate, Dataset,
    Document, PreprocessConfig,
};
use expertbench::evalproto::{
    aggregate, average_precision, evaluate_ranking, first_relevant_rank, precision_at_k, roc_auc,
    Metric, QueryScore,
};
use expertbench::rankers::{
    propagate, vote_scores, FusionRule, PropagationParams, RankerEngine, RankerSpec, Ranking,
};
use expertbench::textrep::{
    fit_representation, similarities, smoothed_idf, truncated_svd, vectorize_query, FeatureVec,
    RepConfig, RepKind, SvdConfig, VocabConfig,
};
use proptest::prelude::*;

fn word() -> impl Strategy<Value = String> {
    (0..14u8).prop_map(|i| format!("k{i}"))
}

fn text() -> impl Strategy<Value = String> {
    prop::collection::vec(word(), 1..25).prop_map(|w| w.join(" "))
}

prop_compose! {
    fn dataset()(
        nc in 1usize..8,
        texts in prop::collection::vec(text(), 1..14),
        seed_edges in prop::collection::vec((0usize..100, 0usize..100), 0..40),
        expert_picks in prop::collection::vec((0usize..3, 0usize..100), 0..8),
    ) -> Dataset {
        let cands: Vec<Candidate> = (0..nc)
            .map(|c| Candidate { id: format!("c{c}"), name: format!("Name {c}") })
            .collect();
        let docs: Vec<Document> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Document { id: format!("d{i:03}"), text: t.clone() })
            .collect();
        let edges: Vec<(String, String)> = seed_edges
            .iter()
            .map(|&(d, c)| (format!("d{:03}", d % docs.len()), format!("c{}", c % nc)))
            .collect();
        let mut topics: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (t, c) in expert_picks {
            topics.entry(format!("topic {t}")).or_default().insert(format!("c{}", c % nc));
        }
        Dataset::from_parts(cands, docs, edges, topics).unwrap()
    }
}

fn plain_rep(kind: RepKind) -> RepConfig {
    RepConfig {
        kind,
        vocab: VocabConfig {
            min_term_count: 1,
            max_doc_fraction: 1.0,
            phrase_passes: 0,
            stopwords: BTreeSet::new(),
            ..Default::default()
        },
        lsi_rank: 4,
        ..Default::default()
    }
}

fn texts_of(ds: &Dataset) -> Vec<String> {
    ds.documents().iter().map(|d| d.text.clone()).collect()
}

fn scored_ranking() -> impl Strategy<Value = (Vec<f64>, BTreeSet<usize>)> {
    (1usize..12).prop_flat_map(|n| {
        (
            prop::collection::vec((0..6u8).prop_map(|v| v as f64 / 5.0), n),
            prop::collection::btree_set(0..n, 0..=n),
        )
    })
}

fn brute_ap(order: &[usize], relevant: &BTreeSet<usize>) -> f64 {
    let mut sum = 0.0;
    for (i, c) in order.iter().enumerate() {
        if relevant.contains(c) {
            let hits = order[..=i].iter().filter(|x| relevant.contains(x)).count();
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / relevant.len() as f64
}

fn brute_auc(scores: &[f64], relevant: &BTreeSet<usize>) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for &p in relevant {
        for n in (0..scores.len()).filter(|n| !relevant.contains(n)) {
            pairs += 1.0;
            if scores[p] > scores[n] {
                num += 1.0;
            } else if scores[p] == scores[n] {
                num += 0.5;
            }
        }
    }
    num / pairs
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn preprocess_bounds_and_idempotence(ds in dataset(), max in 2usize..6, min in 0usize..2, len in 0usize..60) {
        let cfg = PreprocessConfig { max_docs_per_author: max, min_docs_per_author: min, min_text_length: len };
        let once = preprocess(&ds, &cfg).unwrap();
        for c in 0..once.num_candidates() {
            let deg = once.documents_of(c).len();
            prop_assert!(deg >= min && deg < max);
        }
        for d in once.documents() {
            prop_assert!(d.text.chars().count() > len);
        }
        let union: BTreeSet<usize> = once.topics().values().flatten().copied().collect();
        prop_assert_eq!(&union, once.experts_all());
        prop_assert_eq!(preprocess(&once, &cfg).unwrap(), once);
    }

    #[test]
    fn save_load_round_trip(ds in dataset()) {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        prop_assert_eq!(load_dataset(dir.path()).unwrap(), ds);
    }

    #[test]
    fn aminer_block_accounting(blocks in prop::collection::vec((any::<bool>(), prop::collection::vec(0..5u8, 1..4)), 0..12)) {
        let mut dump = String::new();
        let mut expected_edges = 0;
        for (i, (good, authors)) in blocks.iter().enumerate() {
            let names: Vec<String> = authors.iter().map(|a| format!("Author {a}")).collect();
            dump.push_str(&format!("#*Title {i}\n#@{}\n#t2001\n", names.join("; ")));
            if *good {
                dump.push_str(&format!("#index{i}\n#%99\n"));
                expected_edges += names.iter().collect::<BTreeSet<_>>().len();
            }
            dump.push_str("#!Some abstract words.\n\n");
        }
        let parsed = parse_aminer(dump.as_bytes()).unwrap();
        prop_assert_eq!(parsed.records.len() + parsed.rejected, blocks.len());
        prop_assert_eq!(parsed.blocks, blocks.len());
        let (ds, _) = build_dataset(&parsed.records, &BTreeMap::new()).unwrap();
        prop_assert_eq!(ds.edges().len(), expected_edges);
    }

    #[test]
    fn metrics_match_brute_force((scores, relevant) in scored_ranking()) {
        let ranking = Ranking::from_scores(&scores);
        let order: Vec<usize> = ranking.candidates().collect();
        let has_neg = relevant.len() < scores.len();
        match average_precision(&ranking, &relevant) {
            Some(ap) => {
                prop_assert!((0.0..=1.0).contains(&ap));
                prop_assert!((ap - brute_ap(&order, &relevant)).abs() <= 1e-12);
            }
            None => prop_assert!(relevant.is_empty()),
        }
        match roc_auc(&ranking, &relevant) {
            Some(roc) => {
                prop_assert!((roc.auc - brute_auc(&scores, &relevant)).abs() <= 1e-12);
                prop_assert_eq!(roc.points.first().copied(), Some((0.0, 0.0)));
                prop_assert_eq!(roc.points.last().copied(), Some((1.0, 1.0)));
            }
            None => prop_assert!(relevant.is_empty() || !has_neg),
        }
        let p = precision_at_k(&ranking, &relevant, 3);
        prop_assert!((0.0..=1.0).contains(&p));
        if let Some(r) = first_relevant_rank(&ranking, &relevant) {
            prop_assert!(r >= 1 && relevant.contains(&order[r - 1]));
        }
    }

    #[test]
    fn metrics_depend_on_rank_only((scores, relevant) in scored_ranking()) {
        let pool: BTreeSet<usize> = (0..scores.len()).collect();
        let warped: Vec<f64> = scores.iter().map(|s| 7.0 * s * s * s + s.exp() - 4.0).collect();
        let a = evaluate_ranking(&Ranking::from_scores(&scores), &relevant, &pool, 5);
        let b = evaluate_ranking(&Ranking::from_scores(&warped), &relevant, &pool, 5);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn auc_of_reversed_ranking_is_complement(n in 2usize..12, seed in any::<u64>(), cut in 1usize..11) {
        let mut scores: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            scores.swap(i, (s >> 33) as usize % (i + 1));
        }
        let relevant: BTreeSet<usize> = (0..cut.min(n - 1)).collect();
        let fwd = roc_auc(&Ranking::from_scores(&scores), &relevant).unwrap().auc;
        let rev: Vec<f64> = scores.iter().map(|x| -x).collect();
        let back = roc_auc(&Ranking::from_scores(&rev), &relevant).unwrap().auc;
        prop_assert!((fwd + back - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn aggregation_is_recomputable(values in prop::collection::vec((0..3u8, 0.0..1.0f64), 1..20)) {
        let scores: Vec<QueryScore> = values
            .iter()
            .map(|&(t, v)| QueryScore {
                query_id: String::new(),
                topic: format!("t{t}"),
                p_at_k: Some(v),
                average_precision: Some(v),
                first_relevant_rank: Some(1),
                reciprocal_rank: Some(1.0),
                roc_auc: Some(v),
                converged: true,
                roc_points: Vec::new(),
            })
            .collect();
        let (summary, topic_means) = aggregate(&scores);
        let ap = &summary[&Metric::Ap];
        let mean = values.iter().map(|v| v.1).sum::<f64>() / values.len() as f64;
        prop_assert!((ap.mean - mean).abs() <= 1e-12);
        prop_assert_eq!(ap.count, values.len());
        let tm: Vec<f64> = topic_means.values().map(|m| m[&Metric::Ap]).collect();
        let center = tm.iter().sum::<f64>() / tm.len() as f64;
        let spread = (tm.iter().map(|m| (m - center).powi(2)).sum::<f64>() / tm.len() as f64).sqrt();
        prop_assert!((ap.topic_std - spread).abs() <= 1e-12);
    }

    #[test]
    fn idf_is_non_increasing(n in 1usize..10_000, df in 0u64..10_000) {
        let df = df.min(n as u64);
        prop_assert!(smoothed_idf(n, df) >= 1.0);
        if df > 0 {
            prop_assert!(smoothed_idf(n, df - 1) >= smoothed_idf(n, df));
        }
    }

    #[test]
    fn representation_properties(ds in dataset(), q in text()) {
        let texts = texts_of(&ds);
        for kind in RepKind::ALL {
            let m = fit_representation(&texts, &plain_rep(kind)).unwrap();
            prop_assert_eq!(m.num_docs(), texts.len());
            let again = fit_representation(&texts, &plain_rep(kind)).unwrap();
            prop_assert_eq!(m.rows(), again.rows());
            if let Some(idf) = m.model().idf() {
                prop_assert!(idf.iter().all(|&w| w >= 0.0));
            }
            if let Some(lsi) = m.model().lsi() {
                prop_assert!(lsi.rank() <= texts.len().min(m.model().vocab().len()));
            }
            let (lo, hi) = if kind == RepKind::Lsi { (-1.0, 1.0) } else { (0.0, 1.0) };
            for s in similarities(&vectorize_query(&q, &m), &m) {
                prop_assert!((lo..=hi).contains(&s));
            }
            if kind == RepKind::Tf {
                for (d, t) in texts.iter().enumerate() {
                    prop_assert_eq!(&vectorize_query(t, &m), m.row(d));
                }
            }
        }
    }

    #[test]
    fn full_rank_svd_reconstructs(ds in dataset()) {
        let m = fit_representation(&texts_of(&ds), &plain_rep(RepKind::TfIdf)).unwrap();
        let n = m.model().dim();
        let rows: Vec<_> = m.rows().iter().map(|r| match r {
            FeatureVec::Sparse(s) => s.clone(),
            FeatureVec::Dense(_) => unreachable!(),
        }).collect();
        let svd = truncated_svd(&rows, n, &SvdConfig { rank: n, ..Default::default() });
        let v = &svd.components;
        let (mut err, mut total) = (0.0, 0.0);
        for r in m.rows() {
            let x = r.to_dense(n);
            let c: Vec<f64> = (0..v.ncols()).map(|j| (0..n).map(|t| x[t] * v[(t, j)]).sum()).collect();
            for t in 0..n {
                let y: f64 = c.iter().enumerate().map(|(j, cj)| cj * v[(t, j)]).sum();
                err += (x[t] - y).powi(2);
                total += x[t] * x[t];
            }
        }
        prop_assert!(err.sqrt() <= 1e-6 * total.sqrt().max(f64::MIN_POSITIVE));
    }

    #[test]
    fn ranker_outputs(ds in dataset(), q in text(), leave in any::<prop::sample::Index>()) {
        let texts = texts_of(&ds);
        let m = Arc::new(fit_representation(&texts, &plain_rep(RepKind::TfIdf)).unwrap());
        let shared = Arc::new(ds.clone());
        let leave_out = Some(leave.index(ds.num_documents()));
        let qv = m.model().vectorize(&q);
        for spec in [
            RankerSpec::Panoptic,
            RankerSpec::Vote { fusion: FusionRule::CombMnz },
            RankerSpec::Propagation(PropagationParams::default()),
        ] {
            let engine = RankerEngine::new(shared.clone(), m.clone(), spec).unwrap();
            let r = engine.rank(&qv, leave_out);
            let ids: BTreeSet<usize> = r.candidates().collect();
            prop_assert_eq!(ids.len(), ds.num_candidates());
            prop_assert_eq!(r.len(), ds.num_candidates());
            for w in r.entries().windows(2) {
                prop_assert!(w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0));
            }
            prop_assert_eq!(&r, &engine.rank(&qv, leave_out));
        }

        let sims = similarities(&qv, &m);
        let rr = vote_scores(&ds, &sims, FusionRule::ReciprocalRank, leave_out);
        for (c, s) in rr.iter().enumerate() {
            let linked = ds.documents_of(c).iter().any(|&d| Some(d) != leave_out);
            prop_assert_eq!(*s > 0.0, linked);
        }

        let scale = 8.0;
        let scaled: Vec<f64> = sims.iter().map(|s| s * scale).collect();
        for fusion in [FusionRule::ReciprocalRank, FusionRule::CombSum] {
            let a = Ranking::from_scores(&vote_scores(&ds, &sims, fusion, leave_out));
            let b = Ranking::from_scores(&vote_scores(&ds, &scaled, fusion, leave_out));
            prop_assert!(a.candidates().eq(b.candidates()));
        }
        let params = PropagationParams::default();
        let a = propagate(&ds, &sims, &params, leave_out);
        let b = propagate(&ds, &scaled, &params, leave_out);
        prop_assert!(a.state.iter().all(|&v| v >= 0.0));
        prop_assert!(Ranking::from_scores(&a.candidate_scores)
            .candidates()
            .eq(Ranking::from_scores(&b.candidate_scores).candidates()));
    }
}
