//! Retraining from scratch on S∖S_f, the reference every unlearned model is
//! judged against.

use crate::cooccur::build_stats;
use crate::error::Result;
use crate::recovery::{train_from_stats, train_with_anchors, RecoveryOptions, TrainedModel};
use crate::synth::Corpus;
use crate::unlearn::{anchor_stability_bound, UnlearnConfig};

#[derive(Debug, Clone)]
pub struct RetrainReport {
    /// Retrained with the stored anchor set held fixed.
    pub forced: TrainedModel,
    /// Retrained with anchors searched afresh. Diagnostic only.
    pub fresh: TrainedModel,
    pub anchors_changed: bool,
    /// Whether the deletion stays within the anchor-stability bound, the
    /// regime in which the forced comparison is the meaningful one.
    pub within_anchor_bound: bool,
}

impl RetrainReport {
    /// The model the unlearned output should be compared to.
    pub fn reference(&self) -> &TrainedModel {
        if self.within_anchor_bound {
            &self.forced
        } else {
            &self.fresh
        }
    }
}

/// Reruns the pipeline on `remaining` with the stored anchor seed so that
/// an empty forget set reproduces `stored` exactly.
pub fn retrain_oracle(
    remaining: &Corpus,
    stored: &TrainedModel,
    opts: &RecoveryOptions,
    cfg: &UnlearnConfig,
) -> Result<RetrainReport> {
    let stats = build_stats(remaining)?;
    let forgotten = stored.stats.num_docs.saturating_sub(stats.num_docs);
    let r = stored.anchors.len();
    let within_anchor_bound = forgotten <= anchor_stability_bound(cfg, stored.stats.num_docs, r);

    let mut fresh_opts = opts.clone();
    fresh_opts.num_topics = r;
    fresh_opts.seed = stored.anchors.seed;
    if stored.anchors.projection_dim < stored.stats.vocab_size() {
        fresh_opts.projection_dim = Some(stored.anchors.projection_dim);
    }
    let forced = train_with_anchors(stats.clone(), stored.anchors.clone(), &fresh_opts)?;
    let fresh = train_from_stats(stats, &fresh_opts)?;
    let anchors_changed = fresh.anchors.indices != stored.anchors.indices;
    Ok(RetrainReport {
        forced,
        fresh,
        anchors_changed,
        within_anchor_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::metrics::matrix_digest;
    use crate::recovery::train;
    use crate::synth::{generate_corpus, GroundTruth};
    use crate::unlearn::unlearn_pre_noise;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (GroundTruth, Corpus, TrainedModel, RecoveryOptions) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let gt = GroundTruth::generate(40, 3, 0.3, &[0.3; 3], &mut rng).unwrap();
        let corpus = generate_corpus(&gt, 4_000, 4, &mut rng).unwrap();
        let opts = RecoveryOptions {
            seed: 17,
            ..RecoveryOptions::with_topics(3)
        };
        let trained = train(&corpus, &opts).unwrap();
        (gt, corpus, trained, opts)
    }

    #[test]
    fn empty_forget_set_reproduces_training() {
        let (gt, corpus, trained, opts) = setup();
        let report = retrain_oracle(&corpus, &trained, &opts, &UnlearnConfig::from_truth(&gt)).unwrap();
        for model in [&report.forced, &report.fresh] {
            assert_eq!(model, &trained);
            assert_eq!(
                matrix_digest(&model.model.topics),
                matrix_digest(&trained.model.topics)
            );
        }
        assert!(!report.anchors_changed);
        assert!(report.within_anchor_bound);
    }

    #[test]
    fn forced_oracle_tracks_unlearning() {
        let (gt, corpus, trained, opts) = setup();
        let forget: Vec<Vec<usize>> = corpus.docs[..20].to_vec();
        let remaining = corpus.without(&forget).unwrap();
        let report = retrain_oracle(&remaining, &trained, &opts, &UnlearnConfig::from_truth(&gt)).unwrap();
        assert_eq!(report.forced.anchors, trained.anchors);
        let pre = unlearn_pre_noise(&trained, &forget, opts.rank_tol).unwrap();
        assert!((&pre.stats.q - &report.forced.stats.q).amax() < 1e-10);
        let err = (&pre.topics - &report.forced.model.topics).amax();
        assert!(err < 0.05, "{err}");
    }
}
