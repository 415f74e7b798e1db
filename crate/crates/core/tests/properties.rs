use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use topic_unlearn::cooccur::{build_stats, remove_documents};
use topic_unlearn::harness::bundle_bytes;
use topic_unlearn::harness::{expand_grid, parse_grid, Provenance, StatsBundle};
use topic_unlearn::recovery::{psd_project, simplex_project, train, RecoveryOptions};
use topic_unlearn::synth::{generate_corpus, Corpus, GroundTruth};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn simplex_projection_lands_on_simplex(v in prop::collection::vec(-10.0f64..10.0, 1..20)) {
        let p = simplex_project(&v);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!(dist(&simplex_project(&p), &p) <= 1e-12);
    }

    #[test]
    fn simplex_projection_is_non_expansive(
        pair in (1usize..12).prop_flat_map(|d| (
            prop::collection::vec(-5.0f64..5.0, d),
            prop::collection::vec(-5.0f64..5.0, d),
        ))
    ) {
        let (x, y) = pair;
        prop_assert!(dist(&simplex_project(&x), &simplex_project(&y)) <= dist(&x, &y) + 1e-12);
    }

    #[test]
    fn psd_projection_is_psd_and_idempotent(k in 1usize..7, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = DMatrix::from_fn(k, k, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let sym = (&b + b.transpose()) * 0.5;
        let p = psd_project(&sym).unwrap();
        prop_assert!(p.clone().symmetric_eigen().eigenvalues.min() >= -1e-10);
        prop_assert!((psd_project(&p).unwrap() - &p).amax() <= 1e-10);
    }

    #[test]
    fn grid_expansion_is_the_cartesian_product(a in 1usize..5, b in 1usize..5, c in 1usize..4) {
        let axis = |k: usize| (0..k).map(|i| i.to_string()).collect::<Vec<_>>().join(",");
        let spec = format!("x={};y={};z={}", axis(a), axis(b), axis(c));
        let pts = expand_grid(&parse_grid(&spec).unwrap());
        prop_assert_eq!(pts.len(), a * b * c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn downdate_equals_rebuild(
        seed in any::<u64>(),
        n in 3usize..25,
        doc_len in 2usize..6,
        m in 2usize..200,
        frac in 0.0f64..0.95,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = 2.min(n);
        let gt = GroundTruth::generate(n, r, 0.3, &vec![0.5; r], &mut rng).unwrap();
        let corpus = generate_corpus(&gt, m, doc_len, &mut rng).unwrap();
        let m_u = ((m as f64) * frac) as usize;
        let forget: Vec<Vec<usize>> = index::sample(&mut rng, m, m_u)
            .into_iter()
            .map(|d| corpus.docs[d].clone())
            .collect();
        let down = remove_documents(&build_stats(&corpus).unwrap(), &forget).unwrap();
        let rebuilt = build_stats(&corpus.without(&forget).unwrap()).unwrap();
        prop_assert!((&down.q - &rebuilt.q).amax() <= 1e-10);
        prop_assert_eq!(down.num_docs, rebuilt.num_docs);
        prop_assert_eq!(down.empty_words, rebuilt.empty_words);
    }

    #[test]
    fn bundle_round_trip_is_identity(seed in any::<u64>(), n in 6usize..30, r in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gt = GroundTruth::generate(n, r, 0.4, &vec![0.5; r], &mut rng).unwrap();
        let corpus: Corpus = generate_corpus(&gt, 3_000, 4, &mut rng).unwrap();
        // Small noisy corpora can legitimately defeat the anchor search.
        let Ok(trained) = train(&corpus, &RecoveryOptions { seed, ..RecoveryOptions::with_topics(r) }) else {
            return Ok(());
        };
        let mut prov = Provenance::default();
        prov.seeds.insert("corpus".into(), seed);
        let bundle = StatsBundle::from_trained(trained, prov);
        let bytes = bundle_bytes::to_bytes(&bundle).unwrap();
        let back = bundle_bytes::from_bytes(&bytes).unwrap();
        prop_assert_eq!(&back, &bundle);
        prop_assert_eq!(bundle_bytes::to_bytes(&back).unwrap(), bytes);
    }
}
