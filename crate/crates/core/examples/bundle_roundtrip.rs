//! Persists the training statistics, reloads them bit for bit, and shows
//! the errors raised for damaged or foreign files.
//!
//! cargo run --example bundle_roundtrip

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use topic_unlearn::harness::{load_bundle, matrix_digest, save_bundle, Provenance, StatsBundle};
use topic_unlearn::recovery::{train, RecoveryOptions};
use topic_unlearn::synth::{generate_corpus, GroundTruth};

fn main() -> topic_unlearn::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let gt = GroundTruth::generate(60, 4, 0.3, &[0.4; 4], &mut rng)?;
    let corpus = generate_corpus(&gt, 5_000, 3, &mut rng)?;
    let trained = train(&corpus, &RecoveryOptions::with_topics(4))?;

    let mut prov = Provenance::default();
    prov.seeds.insert("corpus".into(), 9);
    let bundle = StatsBundle::from_trained(trained, prov);

    let dir = std::env::temp_dir().join("topic-unlearn-bundle-demo");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("model.bundle");
    save_bundle(&bundle, &path)?;
    let back = load_bundle(&path)?;
    println!(
        "round trip equal: {}, A digest {}",
        back == bundle,
        &matrix_digest(&back.model.topics)[..16]
    );

    let bytes = std::fs::read(&path)?;
    std::fs::write(&path, &bytes[..bytes.len() / 2])?;
    println!("truncated: {}", load_bundle(&path).unwrap_err());

    let mut forged = bytes.clone();
    let at = forged.iter().position(|&b| b == b' ').unwrap() + 2;
    forged[at] = b'9';
    std::fs::write(&path, &forged)?;
    println!("foreign version: {}", load_bundle(&path).unwrap_err());
    Ok(())
}
