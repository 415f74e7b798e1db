//! Anchor search and topic recovery from co-occurrence statistics, with the
//! dense kernels they share with unlearning.

mod align;
mod anchors;
mod kernels;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::cooccur::{build_stats, CooccurrenceStats};
use crate::error::{Error, Result};
use crate::synth::Corpus;

pub use align::{align_columns, Alignment};
pub use anchors::{projection_dim, recover_anchors, AnchorSet};
pub use kernels::{
    min_singular_value, pseudoinverse, psd_project, simplex_project, simplex_project_columns,
    simplex_project_vec, singular_values, LsqSolution, SimplexLsq, SolverOptions,
};

pub const DEFAULT_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RecoveryOptions {
    pub num_topics: usize,
    /// Recovery tolerance. Sets the random projection dimension and enters
    /// the sensitivity formulas.
    pub eps0: f64,
    /// Overrides the projection dimension derived from `eps0`.
    pub projection_dim: Option<usize>,
    /// Gradient-mapping tolerance of the per-word simplex solves.
    pub solver_tol: f64,
    pub max_iter: usize,
    pub rank_tol: f64,
    pub seed: u64,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self {
            num_topics: 5,
            eps0: 0.1,
            projection_dim: None,
            solver_tol: 1e-10,
            max_iter: 10_000,
            rank_tol: DEFAULT_RANK_TOL,
            seed: 0,
        }
    }
}

impl RecoveryOptions {
    pub fn with_topics(r: usize) -> Self {
        Self {
            num_topics: r,
            ..Self::default()
        }
    }

    fn solver(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver_tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    /// A: n×r, column-stochastic.
    pub topics: DMatrix<f64>,
    /// R = A†·Q·A†ᵀ projected to the PSD cone.
    pub topic_covariance: DMatrix<f64>,
    /// C: n×r; row i holds the simplex weights of word i over the anchors.
    pub coefficients: DMatrix<f64>,
    pub eps0: f64,
}

impl TopicModel {
    pub fn num_topics(&self) -> usize {
        self.topics.ncols()
    }

    pub fn vocab_size(&self) -> usize {
        self.topics.nrows()
    }

    pub fn validate(&self, empty_words: &[usize]) -> Result<()> {
        for (k, col) in self.topics.column_iter().enumerate() {
            if col.iter().any(|&v| v < 0.0) || (col.sum() - 1.0).abs() > 1e-8 {
                return Err(Error::Numerical(format!("column {k} of A is not stochastic")));
            }
        }
        let r = &self.topic_covariance;
        if (r - r.transpose()).amax() > 1e-10 {
            return Err(Error::Numerical("R is not symmetric".into()));
        }
        if r.clone().symmetric_eigen().eigenvalues.min() < -1e-8 {
            return Err(Error::Numerical("R is not PSD".into()));
        }
        for (i, row) in self.coefficients.row_iter().enumerate() {
            if empty_words.contains(&i) {
                continue;
            }
            if row.iter().any(|&v| v < 0.0) || (row.sum() - 1.0).abs() > 1e-8 {
                return Err(Error::Numerical(format!("row {i} of C is off the simplex")));
            }
        }
        Ok(())
    }
}

/// Everything training produces: the statistics, the anchors and the model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub stats: CooccurrenceStats,
    pub anchors: AnchorSet,
    pub model: TopicModel,
}

/// Anchor rows of Q̄ stacked as an r×n matrix.
pub fn anchor_rows(qbar: &DMatrix<f64>, anchors: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(anchors.len(), qbar.ncols(), |k, j| qbar[(anchors[k], j)])
}

/// A = column-normalize(diag(p)·C) and R = A†·Q·A†ᵀ.
///
/// Returns A and the raw (not yet PSD-projected) R.
pub fn assemble_topics(
    q: &DMatrix<f64>,
    p: &DVector<f64>,
    coefficients: &DMatrix<f64>,
    rank_tol: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let mut a = coefficients.clone();
    for (i, mut row) in a.row_iter_mut().enumerate() {
        row *= p[i];
    }
    for (k, mut col) in a.column_iter_mut().enumerate() {
        let s = col.sum();
        if !(s > 0.0) {
            return Err(Error::Numerical(format!("topic {k} received no mass")));
        }
        col /= s;
    }
    let pinv = pseudoinverse(&a, rank_tol)?;
    let r = &pinv * q * pinv.transpose();
    Ok((a, r))
}

/// Solves the per-word simplex least-squares problems against fixed anchors.
/// Anchor rows are set to the matching vertex and unseen words to zero.
pub fn recover_coefficients(
    stats: &CooccurrenceStats,
    anchors: &AnchorSet,
    opts: &RecoveryOptions,
) -> Result<DMatrix<f64>> {
    let n = stats.vocab_size();
    let r = anchors.len();
    anchors.validate(n)?;
    if let Some(&w) = anchors.indices.iter().find(|w| stats.empty_words.contains(w)) {
        return Err(Error::RankDeficient(format!("anchor word {w} no longer occurs")));
    }
    let solver = SimplexLsq::new(anchor_rows(&stats.qbar, &anchors.indices))?;
    let solver_opts = opts.solver();
    let active = stats.active_words();

    let rows: Vec<(usize, Result<DVector<f64>>)> = active
        .par_iter()
        .map(|&i| {
            if let Some(k) = anchors.indices.iter().position(|&w| w == i) {
                let mut e = DVector::zeros(r);
                e[k] = 1.0;
                return (i, Ok(e));
            }
            let qi = stats.qbar.row(i).transpose();
            (i, solver.solve(&qi, &solver_opts).map(|s| s.coefficients))
        })
        .collect();

    let mut c = DMatrix::zeros(n, r);
    let mut failures = Vec::new();
    for (i, row) in rows {
        match row {
            Ok(v) => c.set_row(i, &v.transpose()),
            Err(e) => failures.push((i, e)),
        }
    }
    if let Some((_, first)) = failures.into_iter().next() {
        return Err(first);
    }
    Ok(c)
}

/// Recovers (C, A, R) for a fixed anchor set.
pub fn recover_topics(
    stats: &CooccurrenceStats,
    anchors: &AnchorSet,
    opts: &RecoveryOptions,
) -> Result<TopicModel> {
    let coefficients = recover_coefficients(stats, anchors, opts)?;
    let (topics, r_raw) = assemble_topics(&stats.q, &stats.p, &coefficients, opts.rank_tol)?;
    Ok(TopicModel {
        topics,
        topic_covariance: psd_project(&r_raw)?,
        coefficients,
        eps0: opts.eps0,
    })
}

pub fn find_anchors(stats: &CooccurrenceStats, opts: &RecoveryOptions) -> Result<AnchorSet> {
    recover_anchors(
        &stats.qbar,
        &stats.active_words(),
        opts.num_topics,
        opts.eps0,
        opts.projection_dim,
        opts.seed,
    )
}

/// Learning phases two and three on precomputed statistics.
pub fn train_from_stats(stats: CooccurrenceStats, opts: &RecoveryOptions) -> Result<TrainedModel> {
    let anchors = find_anchors(&stats, opts)?;
    let model = recover_topics(&stats, &anchors, opts)?;
    Ok(TrainedModel {
        stats,
        anchors,
        model,
    })
}

/// Like [`train_from_stats`] but with the anchor set fixed in advance.
pub fn train_with_anchors(
    stats: CooccurrenceStats,
    anchors: AnchorSet,
    opts: &RecoveryOptions,
) -> Result<TrainedModel> {
    let model = recover_topics(&stats, &anchors, opts)?;
    Ok(TrainedModel {
        stats,
        anchors,
        model,
    })
}

/// The full three-phase pipeline on a corpus.
pub fn train(corpus: &Corpus, opts: &RecoveryOptions) -> Result<TrainedModel> {
    train_from_stats(build_stats(corpus)?, opts)
}
