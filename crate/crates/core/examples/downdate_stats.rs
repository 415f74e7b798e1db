//! Removes documents from the co-occurrence statistics in O(m_U) and checks
//! the result against a rebuild from the remaining corpus.
//!
//! cargo run --example downdate_stats

use std::time::Instant;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use topic_unlearn::cooccur::{build_stats, remove_documents};
use topic_unlearn::synth::{generate_corpus, GroundTruth};
use topic_unlearn::Error;

fn main() -> topic_unlearn::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let gt = GroundTruth::generate(200, 5, 0.3, &[0.5; 5], &mut rng)?;
    let corpus = generate_corpus(&gt, 50_000, 2, &mut rng)?;
    let stats = build_stats(&corpus)?;

    let forget: Vec<Vec<usize>> = index::sample(&mut rng, corpus.len(), 25)
        .into_iter()
        .map(|d| corpus.docs[d].clone())
        .collect();

    let t = Instant::now();
    let down = remove_documents(&stats, &forget)?;
    let downdate = t.elapsed();
    let t = Instant::now();
    let rebuilt = build_stats(&corpus.without(&forget)?)?;
    let rebuild = t.elapsed();

    println!("max |downdate - rebuild| = {:.2e}", (&down.q - &rebuilt.q).amax());
    println!("downdate {downdate:?}, rebuild {rebuild:?}");

    // Deleting a document the corpus never held is caught.
    let bogus = vec![vec![0, 0]; 1_000];
    match remove_documents(&stats, &bogus) {
        Err(Error::InconsistentForgetSet { row, col, value }) => {
            println!("refused foreign documents: Q[{row},{col}] would be {value:.2e}")
        }
        other => println!("unexpected: {other:?}"),
    }
    Ok(())
}
