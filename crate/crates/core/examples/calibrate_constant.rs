//! Calibrates the hidden constant of the noise-free unlearning bound on one
//! set of seeds and validates it on held-out seeds.
//!
//! cargo run --release --example calibrate_constant

use topic_unlearn::harness::{calibrate_constants, loglog_slope, run_regime, Regime};
use topic_unlearn::recovery::RecoveryOptions;
use topic_unlearn::unlearn::UnlearnConfig;

fn main() -> topic_unlearn::Result<()> {
    let regime = Regime {
        name: "n100-r5".into(),
        n: 100,
        r: 5,
        m: 20_000,
        doc_len: 2,
        p_sep: 0.3,
        alpha: 0.3,
        row_concentration: 1.0,
        forget_sizes: vec![5, 10, 20, 40],
    };
    let cfg = UnlearnConfig::default();
    let opts = RecoveryOptions::default();
    let seeds: Vec<u64> = (0..10).collect();
    let report = calibrate_constants(&cfg, &[regime.clone()], &seeds, &opts, 1e-6)?;
    let cal = &report.regimes[0];
    println!("calibrated c = {:.4e} (max ratio {:.4e})", cal.constant, cal.max_ratio);

    let held_out: Vec<u64> = (100..110).collect();
    let obs = run_regime(&regime, &cfg, &opts, &held_out)?;
    let ok = obs.iter().filter(|o| cal.satisfied_by(o)).count();
    println!("held-out observations within the bound: {ok}/{}", obs.len());
    println!("m_u\tseed\terror\tkernel");
    for o in &obs {
        println!("{}\t{}\t{:.3e}\t{:.3e}", o.m_u, o.seed, o.error, o.kernel);
    }
    match loglog_slope(&obs) {
        Ok(reg) => println!("log-log slope of error against m_u: {:.3}", reg.slope),
        Err(e) => println!("slope undefined: {e}"),
    }
    println!("updated config c_sens_a = {:.4e}", report.apply(&cfg).c_sens_a);
    Ok(())
}
