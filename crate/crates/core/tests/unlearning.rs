use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use topic_unlearn::cooccur::CooccurrenceStats;
use topic_unlearn::downstream::{head_tune, unlearn_realistic, HeadOptions};
use topic_unlearn::harness::{
    load_bundle, matrix_digest, retrain_oracle, save_bundle, PrivacyLedger, Provenance,
    StatsBundle,
};
use topic_unlearn::recovery::{train, train_from_stats, RecoveryOptions, TrainedModel};
use topic_unlearn::synth::{generate_corpus, generate_task, Corpus, GroundTruth, TaskParams};
use topic_unlearn::unlearn::{unlearn_base, UnlearnConfig};
use topic_unlearn::Error;

fn roomy(gt: &GroundTruth) -> UnlearnConfig {
    UnlearnConfig {
        c_cap: 1e6,
        c_anchor: 1e12,
        ..UnlearnConfig::from_truth(gt)
    }
}

fn sampled(seed: u64) -> (GroundTruth, Corpus, TrainedModel, RecoveryOptions) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gt = GroundTruth::generate(50, 4, 0.3, &[0.3; 4], &mut rng).unwrap();
    let corpus = generate_corpus(&gt, 10_000, 3, &mut rng).unwrap();
    let opts = RecoveryOptions {
        seed: 99,
        ..RecoveryOptions::with_topics(4)
    };
    let trained = train(&corpus, &opts).unwrap();
    (gt, corpus, trained, opts)
}

#[test]
fn retrain_with_nothing_forgotten_survives_a_bundle_round_trip() {
    let (gt, corpus, trained, opts) = sampled(1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bundle");
    save_bundle(&StatsBundle::from_trained(trained.clone(), Provenance::default()), &path).unwrap();
    let stored = load_bundle(&path).unwrap().trained();
    let report = retrain_oracle(&corpus, &stored, &opts, &roomy(&gt)).unwrap();
    assert_eq!(report.forced, trained);
    assert_eq!(report.fresh, trained);
}

#[test]
fn released_model_is_feasible_and_seed_determined() {
    let (gt, corpus, trained, _) = sampled(2);
    let forget = corpus.docs[..8].to_vec();
    let cfg = roomy(&gt);
    let a = unlearn_base(&trained, &forget, &cfg, 5).unwrap();
    let b = unlearn_base(&trained, &forget, &cfg, 5).unwrap();
    let c = unlearn_base(&trained, &forget, &cfg, 6).unwrap();
    assert_eq!(matrix_digest(&a.released.topics), matrix_digest(&b.released.topics));
    assert_ne!(matrix_digest(&a.released.topics), matrix_digest(&c.released.topics));
    for col in a.released.topics.column_iter() {
        assert!((col.sum() - 1.0).abs() < 1e-12);
        assert!(col.iter().all(|&v| v >= 0.0));
    }
    let eig = a.released.topic_covariance.clone().symmetric_eigen().eigenvalues;
    assert!(eig.min() >= -1e-10);

    let mut ledger = PrivacyLedger::default();
    ledger.record("topics", &a.noise_a, &cfg);
    ledger.record("topic_covariance", &a.noise_r, &cfg);
    assert_eq!(ledger.len(), 2);
    assert_eq!(ledger.entries[0].sigma, a.noise_a.sigma);
}

#[test]
fn capacity_refusal_leaves_the_model_alone() {
    let (gt, corpus, trained, _) = sampled(3);
    let before = trained.clone();
    let err = unlearn_base(&trained, &corpus.docs[..8], &UnlearnConfig::from_truth(&gt), 1).unwrap_err();
    assert!(matches!(err, Error::CapacityExceeded { requested: 8, .. }));
    assert_eq!(err.exit_code(), 2);
    assert_eq!(trained, before);
}

#[test]
fn empty_deletion_on_population_statistics_is_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let gt = GroundTruth::generate(60, 4, 0.3, &[0.3, 0.4, 0.5, 0.6], &mut rng).unwrap();
    let stats = CooccurrenceStats::from_matrix(gt.population_cooccurrence(), 100_000, 2).unwrap();
    let trained = train_from_stats(stats, &RecoveryOptions::with_topics(4)).unwrap();
    let cfg = UnlearnConfig {
        noise_enabled: false,
        ..roomy(&gt)
    };
    let out = unlearn_base(&trained, &[], &cfg, 0).unwrap();
    assert_eq!(out.pre_noise.coefficients, trained.model.coefficients);
    assert_eq!(out.pre_noise.topics, trained.model.topics);
    // The release still passes through the simplex projection.
    assert!((&out.released.topics - &trained.model.topics).amax() < 1e-15);
}

#[test]
fn head_release_after_reload_matches_in_memory_release() {
    let (gt, corpus, trained, _) = sampled(5);
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let task = generate_task(
        &gt,
        &TaskParams {
            topic_subset: vec![1, 2],
            dataset_size: 150,
            label_noise: 0.1,
            head_norm: 2.0,
            doc_len: 10,
        },
        &mut rng,
    )
    .unwrap();
    let head = head_tune(&trained.model.topics, &task, &HeadOptions::default()).unwrap();
    let forget = corpus.docs[..6].to_vec();
    let cfg = roomy(&gt);
    let direct = unlearn_realistic(&trained, &head, &forget, &task, &cfg, 3).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.bundle");
    let bundle = StatsBundle::from_trained(trained, Provenance::default()).with_head(head, task);
    save_bundle(&bundle, &path).unwrap();
    let back = load_bundle(&path).unwrap();
    let again = unlearn_realistic(
        &back.trained(),
        back.head.as_ref().unwrap(),
        &forget,
        back.task.as_ref().unwrap(),
        &cfg,
        3,
    )
    .unwrap();
    assert_eq!(direct.v_tilde, again.v_tilde);
    assert_eq!(direct.noise, again.noise);
}
