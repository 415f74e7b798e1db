//! Forgets documents from a trained base model, releases the noised
//! (Ã, R̃), and compares the pre-noise update with retraining.
//!
//! cargo run --release --example base_unlearn

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use topic_unlearn::harness::{retrain_oracle, ExperimentReport};
use topic_unlearn::recovery::{train, RecoveryOptions};
use topic_unlearn::synth::{generate_corpus, GroundTruth};
use topic_unlearn::unlearn::{unlearn_base, UnlearnConfig};
use topic_unlearn::Error;

fn main() -> topic_unlearn::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let gt = GroundTruth::generate(100, 5, 0.3, &[0.3; 5], &mut rng)?;
    let corpus = generate_corpus(&gt, 20_000, 2, &mut rng)?;
    let opts = RecoveryOptions::with_topics(5);
    let trained = train(&corpus, &opts)?;
    let forget: Vec<Vec<usize>> = corpus.docs[..20].to_vec();

    // With unit hidden constants nothing may be deleted at this scale.
    let strict = UnlearnConfig::from_truth(&gt);
    if let Err(e @ Error::CapacityExceeded { .. }) = unlearn_base(&trained, &forget, &strict, 1) {
        println!("unit constants: {e}");
    }

    let cfg = UnlearnConfig {
        c_cap: 1e3,
        c_anchor: 1e9,
        ..strict
    };
    let out = unlearn_base(&trained, &forget, &cfg, 1)?;
    let oracle = retrain_oracle(&corpus.without(&forget)?, &trained, &opts, &cfg)?;
    let err = (&out.pre_noise.topics - &oracle.forced.model.topics).amax();

    let mut rep = ExperimentReport::new(
        "base unlearning",
        &["m_u", "capacity", "anchor_bound", "sigma_a", "sigma_r", "err_vs_retrain", "total_s"],
    );
    rep.echo("seed", 1);
    rep.echo_config(&cfg);
    rep.push_row(vec![
        out.forgotten.to_string(),
        out.capacity.to_string(),
        out.anchor_bound.to_string(),
        out.noise_a.sigma.to_string(),
        out.noise_r.sigma.to_string(),
        err.to_string(),
        out.timings.total().as_secs_f64().to_string(),
    ])?;
    rep.ledger.record("topics", &out.noise_a, &cfg);
    rep.ledger.record("topic_covariance", &out.noise_r, &cfg);
    print!("{}", rep.to_tsv());
    println!("anchors changed under a fresh retrain: {}", oracle.anchors_changed);
    Ok(())
}
