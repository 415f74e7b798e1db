//! Draws a separable ground truth, a corpus and a labeled downstream task,
//! then writes all three in the text formats the CLI reads.
//!
//! cargo run --example synth_corpus -- /tmp/demo

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use topic_unlearn::synth::{
    generate_corpus, generate_task, write_corpus, write_task, write_truth, GroundTruth, TaskParams,
};

fn main() -> topic_unlearn::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "synth-out".into()));
    std::fs::create_dir_all(&dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let gt = GroundTruth::generate(200, 5, 0.3, &[0.3, 0.4, 0.5, 0.6, 0.7], &mut rng)?;
    println!(
        "truth: n={} r={} anchors={:?} a={:.3} gamma={:.3e}",
        gt.vocab_size(),
        gt.num_topics(),
        gt.anchor_indices,
        gt.a_imbalance,
        gt.gamma
    );

    let corpus = generate_corpus(&gt, 5_000, 4, &mut rng)?;
    let task = generate_task(
        &gt,
        &TaskParams {
            topic_subset: vec![1, 3],
            dataset_size: 500,
            label_noise: 0.05,
            head_norm: 2.0,
            doc_len: 20,
        },
        &mut rng,
    )?;
    let positives = task.dataset.iter().filter(|d| d.label > 0).count();
    println!(
        "corpus: {} documents of {} words; task: {} rows, {positives} positive, q={:.3}",
        corpus.len(),
        corpus.doc_len,
        task.dataset.len(),
        task.q
    );

    write_truth(&gt, BufWriter::new(File::create(dir.join("truth.txt"))?))?;
    write_corpus(&corpus, BufWriter::new(File::create(dir.join("corpus.txt"))?))?;
    write_task(&task, BufWriter::new(File::create(dir.join("task.txt"))?))?;
    println!("wrote truth.txt, corpus.txt and task.txt under {}", dir.display());
    Ok(())
}
