//! Certified unlearning for anchor-word topic models.
//!
//! The crate learns a separable topic model from word co-occurrences,
//! removes documents from it without retraining, and releases the result
//! through a calibrated Gaussian mechanism. A downstream linear head tuned on
//! top of the topic features can be unlearned the same way without touching
//! the base model.
//!
//! Module map:
//!
//! - [`synth`]: ground-truth topic models, corpora and classification tasks.
//! - [`cooccur`]: co-occurrence statistics and their exact downdate.
//! - [`recovery`]: anchor search, topic recovery and the numerical kernels.
//! - [`unlearn`]: base-model unlearning, sensitivities and deletion capacity.
//! - [`downstream`]: head tuning and the naive/realistic head unlearning paths.
//! - [`harness`]: metrics, retraining oracles, calibration, benchmarks,
//!   the statistics bundle file and the command line front end.
//!
//! ```no_run
//! use rand::SeedableRng;
//! use rand_chacha::ChaCha8Rng;
//! use topic_unlearn::recovery::{train, RecoveryOptions};
//! use topic_unlearn::synth::{generate_corpus, GroundTruth};
//!
//! let mut rng = ChaCha8Rng::seed_from_u64(7);
//! let truth = GroundTruth::generate(100, 5, 0.3, &[0.2; 5], &mut rng).unwrap();
//! let corpus = generate_corpus(&truth, 20_000, 2, &mut rng).unwrap();
//! let trained = train(&corpus, &RecoveryOptions::default()).unwrap();
//! println!("anchors: {:?}", trained.anchors.indices);
//! ```

pub mod cooccur;
pub mod downstream;
pub mod error;
pub mod harness;
pub mod recovery;
pub mod synth;
pub mod unlearn;

pub use error::{Error, Result};
