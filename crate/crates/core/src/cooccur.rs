//! Word co-occurrence statistics and their exact downdate.
//!
//! For a document with word-count vector H and length L the per-document
//! contribution is `G_d = (H Hᵀ − diag(H)) / (L(L−1))`, and `Q` is the mean of
//! the G_d over the corpus. Every G_d sums to one, so Q does too.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::synth::Corpus;

/// Downdated entries in `[-NEGATIVE_TOLERANCE, 0)` are float round-off.
pub const NEGATIVE_TOLERANCE: f64 = 1e-9;

const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceStats {
    /// n×n symmetric co-occurrence matrix summing to one.
    pub q: DMatrix<f64>,
    /// Row-normalized `q`; rows of unseen words are zero.
    pub qbar: DMatrix<f64>,
    /// Row sums of `q`.
    pub p: DVector<f64>,
    pub num_docs: usize,
    pub doc_len: usize,
    /// Words whose row of `q` is identically zero.
    pub empty_words: Vec<usize>,
}

impl CooccurrenceStats {
    /// Wraps a precomputed co-occurrence matrix, e.g. the population limit
    /// A·E[XXᵀ]·Aᵀ. `num_docs` and `doc_len` are bookkeeping only.
    pub fn from_matrix(q: DMatrix<f64>, num_docs: usize, doc_len: usize) -> Result<Self> {
        if q.nrows() != q.ncols() {
            return Err(Error::InvalidDimensions(format!(
                "co-occurrence matrix is {}×{}",
                q.nrows(),
                q.ncols()
            )));
        }
        if num_docs == 0 {
            return Err(Error::InvalidSize("statistics need at least one document".into()));
        }
        let (qbar, p, empty_words) = row_normalize(&q);
        Ok(Self {
            q,
            qbar,
            p,
            num_docs,
            doc_len,
            empty_words,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.q.nrows()
    }

    /// Words with a nonzero row, in increasing order.
    pub fn active_words(&self) -> Vec<usize> {
        let mut empty = self.empty_words.iter().peekable();
        (0..self.vocab_size())
            .filter(|i| {
                if empty.peek() == Some(&i) {
                    empty.next();
                    false
                } else {
                    true
                }
            })
            .collect()
    }
}

fn pair_normalizer(doc_len: usize) -> f64 {
    (doc_len * (doc_len - 1)) as f64
}

/// Word counts of a document as sorted (word, count) runs.
fn word_counts(doc: &[usize]) -> Vec<(usize, usize)> {
    let mut sorted = doc.to_vec();
    sorted.sort_unstable();
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for w in sorted {
        match runs.last_mut() {
            Some((last, c)) if *last == w => *c += 1,
            _ => runs.push((w, 1)),
        }
    }
    runs
}

/// Adds `scale·(H Hᵀ − diag(H))` into `acc`. Counts are small integers, so
/// with `scale = ±1` the accumulation is exact in f64.
fn accumulate_pairs(acc: &mut DMatrix<f64>, doc: &[usize], scale: f64) {
    let runs = word_counts(doc);
    for &(i, ci) in &runs {
        for &(j, cj) in &runs {
            let pairs = if i == j { ci * (ci - 1) } else { ci * cj };
            if pairs > 0 {
                acc[(i, j)] += scale * pairs as f64;
            }
        }
    }
}

fn check_doc(doc: &[usize], n: usize) -> Result<()> {
    if doc.len() < 2 {
        return Err(Error::DegenerateDocument { len: doc.len() });
    }
    if let Some(&w) = doc.iter().find(|&&w| w >= n) {
        return Err(Error::InvalidSize(format!(
            "word {w} outside a vocabulary of {n}"
        )));
    }
    Ok(())
}

/// G_d for one document.
pub fn doc_cooccurrence(doc: &[usize], n: usize) -> Result<DMatrix<f64>> {
    check_doc(doc, n)?;
    let mut g = DMatrix::zeros(n, n);
    accumulate_pairs(&mut g, doc, 1.0);
    g /= pair_normalizer(doc.len());
    Ok(g)
}

/// Row-normalizes `q`. Returns the normalized matrix, the row sums and the
/// indices of zero rows (left as zero rows).
pub fn row_normalize(q: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, Vec<usize>) {
    let n = q.nrows();
    let p = DVector::from_iterator(n, q.row_iter().map(|row| row.sum()));
    let mut qbar = q.clone();
    let mut empty = Vec::new();
    for i in 0..n {
        if p[i] > 0.0 {
            qbar.row_mut(i).scale_mut(1.0 / p[i]);
        } else {
            qbar.row_mut(i).fill(0.0);
            empty.push(i);
        }
    }
    (qbar, p, empty)
}

/// Q = (1/m) Σ_d G_d over the corpus.
pub fn build_stats(corpus: &Corpus) -> Result<CooccurrenceStats> {
    if corpus.is_empty() {
        return Err(Error::InvalidSize("cannot build statistics of an empty corpus".into()));
    }
    let n = corpus.vocab_size;
    for doc in &corpus.docs {
        check_doc(doc, n)?;
    }
    // Integer pair counts are summed exactly, so the chunked parallel
    // reduction is bit-identical to a serial pass.
    let counts = corpus
        .docs
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = DMatrix::zeros(n, n);
            for doc in chunk {
                accumulate_pairs(&mut acc, doc, 1.0);
            }
            acc
        })
        .reduce(|| DMatrix::zeros(n, n), |a, b| a + b);
    let m = corpus.len();
    let q = counts / (m as f64 * pair_normalizer(corpus.doc_len));
    CooccurrenceStats::from_matrix(q, m, corpus.doc_len)
}

/// Q^F = (m·Q − Σ_{d∈S_f} G_d) / (m − m_U), with p and Q̄ recomputed.
///
/// Costs O(m_U·L² + n²) and never touches the remaining documents.
pub fn remove_documents(
    stats: &CooccurrenceStats,
    forget: &[Vec<usize>],
) -> Result<CooccurrenceStats> {
    let m = stats.num_docs;
    let m_u = forget.len();
    if m_u >= m {
        return Err(Error::CannotEmptyCorpus {
            requested: m_u,
            available: m,
        });
    }
    if m_u == 0 {
        return Ok(stats.clone());
    }
    let n = stats.vocab_size();
    let mut removed = DMatrix::zeros(n, n);
    for doc in forget {
        check_doc(doc, n)?;
        if doc.len() != stats.doc_len {
            return Err(Error::InvalidSize(format!(
                "forget document has {} words, corpus uses {}",
                doc.len(),
                stats.doc_len
            )));
        }
        accumulate_pairs(&mut removed, doc, 1.0);
    }
    let norm = pair_normalizer(stats.doc_len);
    let m_f = (m - m_u) as f64;
    let mut q = (&stats.q * m as f64 - removed / norm) / m_f;

    // Exact zeros come back as tiny residues of m·Q; one pair occurrence is
    // worth 1/(m_F·L(L−1)), so anything far below that is round-off.
    let residue = 1e-3 / (m_f * norm);
    if let Some(k) = q.iter().position(|&v| v < -NEGATIVE_TOLERANCE) {
        return Err(Error::InconsistentForgetSet {
            row: k % n,
            col: k / n,
            value: q[k],
        });
    }
    // A select rather than a branch keeps the cost independent of how
    // sparse Q is.
    q.apply(|v| *v = if *v >= residue { *v } else { 0.0 });
    CooccurrenceStats::from_matrix(q, m - m_u, stats.doc_len)
}
