//! Experiment plumbing: persistence of the statistics bundle, metrics,
//! retraining oracles, constant calibration, runtime benchmarks, reports and
//! the command-line front end.

mod bench;
mod bundle;
mod calibrate;
pub mod cli;
mod grid;
mod metrics;
mod oracle;
mod report;

pub use bench::{bench_runtime, BenchGrid, BenchRow, BenchSummary};
/// In-memory encoding of the bundle file format.
pub mod bundle_bytes {
    pub use super::bundle::{from_bytes, to_bytes};
}
pub use bundle::{load_bundle, save_bundle, Provenance, StatsBundle, BUNDLE_VERSION};
pub use calibrate::{
    calibrate_constants, loglog_slope, run_regime, CalibrationObservation, CalibrationReport, Regime,
    RegimeCalibration,
};
pub use grid::{expand_grid, parse_grid, GridPoint};
pub use metrics::{
    aligned_error, entrywise_error, ks_test_normal, matrix_digest, ols_slope, sample_std,
    KsResult, Regression,
};
pub use oracle::{retrain_oracle, RetrainReport};
pub use report::{cell, ExperimentReport, LedgerEntry, PrivacyLedger};
