//! Tabulates the base and downstream deletion capacities and the
//! anchor-stability bound across corpus sizes.
//!
//! cargo run --example capacity_table

use topic_unlearn::downstream::deletion_capacity_downstream;
use topic_unlearn::unlearn::{anchor_stability_bound, deletion_capacity_base, UnlearnConfig};

fn main() -> topic_unlearn::Result<()> {
    let cfg = UnlearnConfig {
        epsilon: 1.0,
        delta: 1e-5,
        gamma: 0.2,
        p_sep: 0.3,
        a_imbalance: 1.5,
        ..UnlearnConfig::default()
    };
    let (n, r, q) = (10_000, 10, 0.1);
    println!("m\tbase\tdownstream(q={q})\tanchor_bound");
    for m in [10_000usize, 100_000, 1_000_000, 10_000_000, 100_000_000] {
        println!(
            "{m}\t{}\t{}\t{}",
            deletion_capacity_base(&cfg, m, n, r),
            deletion_capacity_downstream(&cfg, m, n, r, q)?,
            anchor_stability_bound(&cfg, m, r)
        );
    }
    Ok(())
}
