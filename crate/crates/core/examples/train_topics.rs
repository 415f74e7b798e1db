//! Learns topics from corpora of growing size and from exact population
//! moments, reporting the aligned entrywise error against the truth.
//!
//! cargo run --release --example train_topics

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use topic_unlearn::cooccur::CooccurrenceStats;
use topic_unlearn::harness::aligned_error;
use topic_unlearn::recovery::{train, train_from_stats, RecoveryOptions};
use topic_unlearn::synth::{generate_corpus, GroundTruth};

fn main() -> topic_unlearn::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let gt = GroundTruth::generate(100, 5, 0.3, &[0.5; 5], &mut rng)?;
    let opts = RecoveryOptions::with_topics(5);

    for m in [2_000, 20_000, 100_000] {
        let corpus = generate_corpus(&gt, m, 4, &mut rng)?;
        let trained = train(&corpus, &opts)?;
        let err = aligned_error(
            &trained.model.topics,
            &gt.a_star,
            Some(&trained.anchors.indices),
            Some(&gt.anchor_indices),
        )?;
        let mut found = trained.anchors.indices.clone();
        found.sort_unstable();
        println!(
            "m={m:>6}: max |A - A*| = {err:.4}, anchors {}",
            if found == gt.anchor_indices { "exact" } else { "differ" }
        );
    }

    // With the population co-occurrence the pipeline is exact.
    let stats = CooccurrenceStats::from_matrix(gt.population_cooccurrence(), 1, 2)?;
    let trained = train_from_stats(stats, &opts)?;
    let err = aligned_error(
        &trained.model.topics,
        &gt.a_star,
        Some(&trained.anchors.indices),
        Some(&gt.anchor_indices),
    )?;
    println!("population: max |A - A*| = {err:.2e}");
    Ok(())
}
