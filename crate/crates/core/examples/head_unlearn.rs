//! Tunes a logistic head on the learned topics and forgets documents
//! through the head-only release, leaving the base model untouched.
//!
//! cargo run --release --example head_unlearn

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use topic_unlearn::downstream::{head_tune, unlearn_naive, unlearn_realistic, HeadOptions};
use topic_unlearn::harness::matrix_digest;
use topic_unlearn::recovery::{train, RecoveryOptions};
use topic_unlearn::synth::{generate_corpus, generate_task, GroundTruth, TaskParams};
use topic_unlearn::unlearn::UnlearnConfig;

fn main() -> topic_unlearn::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let gt = GroundTruth::generate(100, 5, 0.3, &[0.3; 5], &mut rng)?;
    let corpus = generate_corpus(&gt, 20_000, 2, &mut rng)?;
    let trained = train(&corpus, &RecoveryOptions::with_topics(5))?;
    let task = generate_task(
        &gt,
        &TaskParams {
            topic_subset: vec![0, 3],
            dataset_size: 400,
            label_noise: 0.05,
            head_norm: 2.0,
            doc_len: 20,
        },
        &mut rng,
    )?;

    let opts = HeadOptions::default();
    let head = head_tune(&trained.model.topics, &task, &opts)?;
    println!("head w^S = {:?} (norm bound {:.3})", head.w, head.norm_bound);

    let forget: Vec<Vec<usize>> = corpus.docs[..10].to_vec();
    let cfg = UnlearnConfig {
        c_cap: 1e3,
        c_anchor: 1e9,
        ..UnlearnConfig::from_truth(&gt)
    };
    let before = matrix_digest(&trained.model.topics);
    let rel = unlearn_realistic(&trained, &head, &forget, &task, &cfg, 5)?;
    println!(
        "released v~ = {:?}\n  sigma_v = {:.3e} (head {:.2e}, shift {:.2e}, second order {:.2e})",
        rel.v_tilde,
        rel.noise.sigma,
        rel.sensitivity.head_term,
        rel.sensitivity.shift_term,
        rel.sensitivity.second_order_term
    );
    println!("base model untouched: {}", matrix_digest(&trained.model.topics) == before);

    let naive = unlearn_naive(&trained, &forget, &task, &cfg, &opts, 5)?;
    println!("naive path refit head on noised topics: w = {:?}", naive.head.w);
    Ok(())
}
