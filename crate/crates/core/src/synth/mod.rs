//! Ground-truth separable topic models, corpus sampling and downstream tasks.
//!
//! Documents follow the LDA generative process: a topic mixture is drawn from
//! a Dirichlet prior and every word of the document is drawn independently
//! from the induced mixture of topic-word distributions.

mod io;

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Gamma, StandardNormal};

use crate::error::{Error, Result};

pub use io::{read_corpus, read_task, read_truth, write_corpus, write_task, write_truth};

/// Concentration of the symmetric Dirichlet used for non-anchor rows.
pub const DEFAULT_ROW_CONCENTRATION: f64 = 1.0;

/// The generative truth behind a synthetic corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// n×r column-stochastic word-given-topic matrix.
    pub a_star: DMatrix<f64>,
    /// Dirichlet concentration parameters, one per topic.
    pub alpha: Vec<f64>,
    /// `anchor_indices[k]` is the anchor word of topic k.
    pub anchor_indices: Vec<usize>,
    pub p_sep: f64,
    /// max_{i,j} Pr[z=i] / Pr[z=j] under the prior.
    pub a_imbalance: f64,
    /// Smallest singular value of E[XXᵀ].
    pub gamma: f64,
}

impl GroundTruth {
    /// Draws a p-separable topic matrix and attaches the Dirichlet prior.
    pub fn generate<R: Rng + ?Sized>(
        n: usize,
        r: usize,
        p_sep: f64,
        alpha: &[f64],
        rng: &mut R,
    ) -> Result<Self> {
        Self::generate_with(n, r, p_sep, DEFAULT_ROW_CONCENTRATION, alpha, rng)
    }

    pub fn generate_with<R: Rng + ?Sized>(
        n: usize,
        r: usize,
        p_sep: f64,
        row_concentration: f64,
        alpha: &[f64],
        rng: &mut R,
    ) -> Result<Self> {
        if alpha.len() != r {
            return Err(Error::InvalidDimensions(format!(
                "alpha has {} entries for {r} topics",
                alpha.len()
            )));
        }
        let (a_star, anchors) = generate_topic_matrix_with(n, r, p_sep, row_concentration, rng)?;
        Self::new(a_star, alpha.to_vec(), anchors, p_sep)
    }

    /// Assembles a ground truth from its parts, deriving the imbalance and
    /// robustness constants from the prior.
    pub fn new(
        a_star: DMatrix<f64>,
        alpha: Vec<f64>,
        anchor_indices: Vec<usize>,
        p_sep: f64,
    ) -> Result<Self> {
        let r = a_star.ncols();
        if alpha.len() != r || anchor_indices.len() != r {
            return Err(Error::InvalidDimensions(format!(
                "topic matrix has {r} columns but alpha has {} and anchors {}",
                alpha.len(),
                anchor_indices.len()
            )));
        }
        if alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidParameter(
                "Dirichlet parameters must be positive".into(),
            ));
        }
        let a_imbalance = topic_imbalance(&alpha);
        let moments = topic_moments(&alpha);
        let gamma = moments
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |acc, &v| acc.min(v.abs()));
        Ok(Self {
            a_star,
            alpha,
            anchor_indices,
            p_sep,
            a_imbalance,
            gamma,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.a_star.nrows()
    }

    pub fn num_topics(&self) -> usize {
        self.a_star.ncols()
    }

    pub fn topic_probabilities(&self) -> Vec<f64> {
        topic_probabilities(&self.alpha)
    }

    /// E[XXᵀ] of the Dirichlet prior, i.e. the population topic covariance R*.
    pub fn topic_moments(&self) -> DMatrix<f64> {
        topic_moments(&self.alpha)
    }

    /// Population co-occurrence matrix A*·E[XXᵀ]·A*ᵀ.
    pub fn population_cooccurrence(&self) -> DMatrix<f64> {
        let q = &self.a_star * self.topic_moments() * self.a_star.transpose();
        (&q + q.transpose()) * 0.5
    }

    /// Checks the separability and stochasticity invariants.
    pub fn validate(&self) -> Result<()> {
        for (k, col) in self.a_star.column_iter().enumerate() {
            if col.iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidParameter(format!("column {k} has negative entries")));
            }
            let s: f64 = col.sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!("column {k} sums to {s}")));
            }
        }
        for (k, &w) in self.anchor_indices.iter().enumerate() {
            let row = self.a_star.row(w);
            if row[k] < self.p_sep {
                return Err(Error::InvalidParameter(format!(
                    "anchor {w} of topic {k} has mass {} < p_sep",
                    row[k]
                )));
            }
            if row.iter().enumerate().any(|(j, &v)| j != k && v != 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "anchor {w} of topic {k} appears in another topic"
                )));
            }
        }
        Ok(())
    }
}

/// Pr[z=k] = alpha_k / Σ alpha.
pub fn topic_probabilities(alpha: &[f64]) -> Vec<f64> {
    let total: f64 = alpha.iter().sum();
    alpha.iter().map(|a| a / total).collect()
}

pub fn topic_imbalance(alpha: &[f64]) -> f64 {
    let max = alpha.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = alpha.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

/// Second moment E[XXᵀ] of X ~ Dirichlet(alpha), in closed form.
pub fn topic_moments(alpha: &[f64]) -> DMatrix<f64> {
    let r = alpha.len();
    let a0: f64 = alpha.iter().sum();
    let denom = a0 * (a0 + 1.0);
    DMatrix::from_fn(r, r, |i, j| {
        if i == j {
            alpha[i] * (alpha[i] + 1.0) / denom
        } else {
            alpha[i] * alpha[j] / denom
        }
    })
}

/// Draws an n×r column-stochastic matrix in which topic k owns the anchor
/// word `anchors[k]` with mass at least `p_sep`.
pub fn generate_topic_matrix<R: Rng + ?Sized>(
    n: usize,
    r: usize,
    p_sep: f64,
    rng: &mut R,
) -> Result<(DMatrix<f64>, Vec<usize>)> {
    generate_topic_matrix_with(n, r, p_sep, DEFAULT_ROW_CONCENTRATION, rng)
}

/// Like [`generate_topic_matrix`] with an explicit concentration for the
/// symmetric Dirichlet that shapes the non-anchor rows. Large values push
/// every non-anchor word towards an even topic mixture.
pub fn generate_topic_matrix_with<R: Rng + ?Sized>(
    n: usize,
    r: usize,
    p_sep: f64,
    row_concentration: f64,
    rng: &mut R,
) -> Result<(DMatrix<f64>, Vec<usize>)> {
    if r == 0 || n < r {
        return Err(Error::InvalidDimensions(format!(
            "need n >= r >= 1, got n={n}, r={r}"
        )));
    }
    if !(p_sep > 0.0 && p_sep <= 1.0) {
        return Err(Error::InvalidParameter(format!("p_sep must lie in (0, 1], got {p_sep}")));
    }
    if !(row_concentration > 0.0) {
        return Err(Error::InvalidParameter("row concentration must be positive".into()));
    }

    let mut anchors = index::sample(rng, n, r).into_vec();
    anchors.sort_unstable();
    let mut is_anchor = vec![false; n];
    for &w in &anchors {
        is_anchor[w] = true;
    }

    // With no free rows the anchors must carry all the mass.
    let anchor_mass = if n == r { 1.0 } else { p_sep };
    let concentration = vec![row_concentration; r];

    let mut a = DMatrix::<f64>::zeros(n, r);
    for i in (0..n).filter(|&i| !is_anchor[i]) {
        let weights = sample_dirichlet(&concentration, rng);
        for k in 0..r {
            a[(i, k)] = weights[k];
        }
    }
    for k in 0..r {
        let free: f64 = a.column(k).sum();
        if free > 0.0 && anchor_mass < 1.0 {
            let scale = (1.0 - anchor_mass) / free;
            a.column_mut(k).scale_mut(scale);
        } else {
            a.column_mut(k).fill(0.0);
        }
        a[(anchors[k], k)] = anchor_mass;
    }
    Ok((a, anchors))
}

/// Draws from Dirichlet(alpha) by normalizing independent Gamma variates.
pub fn sample_dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    loop {
        let draws: Vec<f64> = alpha
            .iter()
            .map(|&a| Gamma::new(a, 1.0).expect("positive shape").sample(rng))
            .collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 && total.is_finite() {
            return draws.into_iter().map(|d| d / total).collect();
        }
    }
}

/// A bag-of-words corpus with fixed document length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub vocab_size: usize,
    pub doc_len: usize,
    pub docs: Vec<Vec<usize>>,
}

impl Corpus {
    pub fn new(vocab_size: usize, doc_len: usize, docs: Vec<Vec<usize>>) -> Result<Self> {
        for (d, doc) in docs.iter().enumerate() {
            if doc.len() != doc_len {
                return Err(Error::InvalidSize(format!(
                    "document {d} has {} words, expected {doc_len}",
                    doc.len()
                )));
            }
            if let Some(&w) = doc.iter().find(|&&w| w >= vocab_size) {
                return Err(Error::InvalidSize(format!(
                    "document {d} uses word {w} outside a vocabulary of {vocab_size}"
                )));
            }
        }
        Ok(Self {
            vocab_size,
            doc_len,
            docs,
        })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// The corpus with the first occurrence of every forget document removed.
    pub fn without(&self, forget: &[Vec<usize>]) -> Result<Corpus> {
        let mut pending: Vec<Vec<usize>> = forget.iter().map(|d| sorted(d)).collect();
        let mut docs = Vec::with_capacity(self.docs.len());
        for doc in &self.docs {
            let key = sorted(doc);
            if let Some(pos) = pending.iter().position(|f| *f == key) {
                pending.swap_remove(pos);
            } else {
                docs.push(doc.clone());
            }
        }
        if !pending.is_empty() {
            return Err(Error::InvalidSize(format!(
                "{} forget documents are not part of the corpus",
                pending.len()
            )));
        }
        Corpus::new(self.vocab_size, self.doc_len, docs)
    }
}

fn sorted(doc: &[usize]) -> Vec<usize> {
    let mut d = doc.to_vec();
    d.sort_unstable();
    d
}

/// Samples documents from a fixed ground truth. Per-topic word tables are
/// built once, so each document costs O(r + L).
pub struct DocumentSampler<'a> {
    alpha: &'a [f64],
    topic_words: Vec<Option<WeightedIndex<f64>>>,
}

impl<'a> DocumentSampler<'a> {
    pub fn new(a_star: &DMatrix<f64>, alpha: &'a [f64]) -> Result<Self> {
        if a_star.ncols() != alpha.len() {
            return Err(Error::InvalidDimensions(format!(
                "topic matrix has {} columns, alpha has {} entries",
                a_star.ncols(),
                alpha.len()
            )));
        }
        if alpha.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::InvalidParameter("alpha must be entrywise positive".into()));
        }
        let topic_words = a_star
            .column_iter()
            .map(|col| WeightedIndex::new(col.iter().copied()).ok())
            .collect();
        Ok(Self { alpha, topic_words })
    }

    /// One document: W ~ Dirichlet(alpha), then L i.i.d. words from A*·W.
    pub fn sample<R: Rng + ?Sized>(&self, doc_len: usize, rng: &mut R) -> Vec<usize> {
        let mixture = sample_dirichlet(self.alpha, rng);
        let topics = WeightedIndex::new(mixture.iter().copied()).expect("mixture on simplex");
        (0..doc_len)
            .map(|_| {
                // Two-stage draw: topic from W, then word from that topic.
                let z = topics.sample(rng);
                self.topic_words[z]
                    .as_ref()
                    .expect("topic column with positive mass")
                    .sample(rng)
            })
            .collect()
    }
}

pub fn sample_document<R: Rng + ?Sized>(
    a_star: &DMatrix<f64>,
    alpha: &[f64],
    doc_len: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    Ok(DocumentSampler::new(a_star, alpha)?.sample(doc_len, rng))
}

pub fn generate_corpus<R: Rng + ?Sized>(
    gt: &GroundTruth,
    num_docs: usize,
    doc_len: usize,
    rng: &mut R,
) -> Result<Corpus> {
    if num_docs == 0 {
        return Err(Error::InvalidSize("a corpus needs at least one document".into()));
    }
    if doc_len < 2 {
        return Err(Error::DegenerateDocument { len: doc_len });
    }
    let sampler = DocumentSampler::new(&gt.a_star, &gt.alpha)?;
    let docs = (0..num_docs).map(|_| sampler.sample(doc_len, rng)).collect();
    Ok(Corpus {
        vocab_size: gt.vocab_size(),
        doc_len,
        docs,
    })
}

/// One labelled document of a classification task, embedded as word counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDoc {
    pub counts: Vec<u32>,
    /// +1 or -1.
    pub label: i8,
}

/// A binary topic-classification task with a sparse ground-truth head.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub topic_subset: Vec<usize>,
    pub w_star: Vec<f64>,
    /// Norm bound B on the ground-truth head.
    pub head_norm: f64,
    /// min_{k in subset} Pr[z=k].
    pub q: f64,
    pub dataset: Vec<LabeledDoc>,
}

impl TaskSpec {
    pub fn vocab_size(&self) -> usize {
        self.dataset.first().map_or(0, |d| d.counts.len())
    }

    pub fn num_topics(&self) -> usize {
        self.w_star.len()
    }

    /// N×n matrix of word counts, one row per example.
    pub fn design_matrix(&self) -> DMatrix<f64> {
        let n = self.vocab_size();
        DMatrix::from_fn(self.dataset.len(), n, |i, j| self.dataset[i].counts[j] as f64)
    }

    pub fn labels(&self) -> DVector<f64> {
        DVector::from_iterator(self.dataset.len(), self.dataset.iter().map(|d| d.label as f64))
    }
}

#[derive(Debug, Clone)]
pub struct TaskParams {
    pub topic_subset: Vec<usize>,
    pub dataset_size: usize,
    pub label_noise: f64,
    pub head_norm: f64,
    pub doc_len: usize,
}

pub fn min_topic_probability(alpha: &[f64], subset: &[usize]) -> f64 {
    let probs = topic_probabilities(alpha);
    subset.iter().map(|&k| probs[k]).fold(f64::INFINITY, f64::min)
}

/// Builds a task whose ground-truth head is supported on `topic_subset` and
/// labels documents by sign(xᵀA*w*), flipping each label with probability
/// `label_noise`.
pub fn generate_task<R: Rng + ?Sized>(
    gt: &GroundTruth,
    params: &TaskParams,
    rng: &mut R,
) -> Result<TaskSpec> {
    let r = gt.num_topics();
    let mut subset = params.topic_subset.clone();
    subset.sort_unstable();
    subset.dedup();
    if subset.is_empty() {
        return Err(Error::InvalidTask("topic subset is empty".into()));
    }
    if subset.len() != params.topic_subset.len() {
        return Err(Error::InvalidTask("topic subset has duplicates".into()));
    }
    if let Some(&k) = subset.iter().find(|&&k| k >= r) {
        return Err(Error::InvalidTask(format!("topic {k} outside [0, {r})")));
    }
    if params.dataset_size == 0 {
        return Err(Error::InvalidTask("dataset must be nonempty".into()));
    }
    if !(0.0..=1.0).contains(&params.label_noise) {
        return Err(Error::InvalidTask("label noise must be a probability".into()));
    }
    if !(params.head_norm > 0.0) {
        return Err(Error::InvalidTask("head norm bound must be positive".into()));
    }
    if params.doc_len < 2 {
        return Err(Error::DegenerateDocument {
            len: params.doc_len,
        });
    }

    let mut w_star = vec![0.0; r];
    loop {
        for &k in &subset {
            w_star[k] = rng.sample(StandardNormal);
        }
        let norm = w_star.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for v in w_star.iter_mut() {
                *v *= params.head_norm / norm;
            }
            break;
        }
    }

    // Score of word i under the ground-truth head: (A* w*)_i.
    let w = DVector::from_column_slice(&w_star);
    let word_scores = &gt.a_star * &w;

    let n = gt.vocab_size();
    let sampler = DocumentSampler::new(&gt.a_star, &gt.alpha)?;
    let dataset = (0..params.dataset_size)
        .map(|_| {
            let doc = sampler.sample(params.doc_len, rng);
            let mut counts = vec![0u32; n];
            for &word in &doc {
                counts[word] += 1;
            }
            let score: f64 = doc.iter().map(|&word| word_scores[word]).sum();
            let mut label: i8 = if score >= 0.0 { 1 } else { -1 };
            if rng.random::<f64>() < params.label_noise {
                label = -label;
            }
            LabeledDoc { counts, label }
        })
        .collect();

    Ok(TaskSpec {
        q: min_topic_probability(&gt.alpha, &subset),
        topic_subset: subset,
        w_star,
        head_norm: params.head_norm,
        dataset,
    })
}
