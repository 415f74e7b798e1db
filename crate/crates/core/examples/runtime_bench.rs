//! Times unlearning against a full retrain as the corpus grows and prints
//! the tab-separated report.
//!
//! cargo run --release --example runtime_bench

use topic_unlearn::harness::{bench_runtime, BenchGrid};
use topic_unlearn::recovery::RecoveryOptions;
use topic_unlearn::unlearn::UnlearnConfig;

fn main() -> topic_unlearn::Result<()> {
    let grid = BenchGrid {
        ms: vec![10_000, 50_000, 100_000],
        m_u: 10,
        repeats: 7,
        seed: 13,
        ..BenchGrid::default()
    };
    // Unit hidden constants give zero capacity at this scale; the timing
    // question is independent of that policy.
    let cfg = UnlearnConfig {
        c_cap: 1e3,
        c_anchor: 1e6,
        ..UnlearnConfig::default()
    };
    let summary = bench_runtime(&grid, &cfg, &RecoveryOptions::default())?;
    print!("{}", summary.to_report(&cfg).to_tsv());
    for (m, s) in &summary.speedup {
        println!("# retrain/unlearn at m={m}: {s:.1}x");
    }
    Ok(())
}
