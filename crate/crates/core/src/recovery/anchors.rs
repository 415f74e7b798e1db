//! Anchor-word search: greedy farthest-from-span selection over the rows of
//! Q̄, optionally after a Gaussian random projection, followed by one
//! replacement pass.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorSet {
    /// `indices[k]` is the anchor word chosen for topic slot k.
    pub indices: Vec<usize>,
    /// Dimension of the random projection; equals n when none was applied.
    pub projection_dim: usize,
    pub seed: u64,
}

impl AnchorSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let mut sorted = self.indices.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.indices.len() {
            return Err(Error::InvalidParameter("anchor indices are not distinct".into()));
        }
        if let Some(&w) = self.indices.iter().find(|&&w| w >= n) {
            return Err(Error::InvalidParameter(format!(
                "anchor {w} outside a vocabulary of {n}"
            )));
        }
        Ok(())
    }
}

/// ceil(4·ln(n)/eps0²), or n when that would not reduce anything.
pub fn projection_dim(n: usize, eps0: f64) -> usize {
    if n <= 1 {
        return n;
    }
    let d = (4.0 * (n as f64).ln() / (eps0 * eps0)).ceil();
    if d >= n as f64 {
        n
    } else {
        d as usize
    }
}

/// Orthonormal basis built by modified Gram–Schmidt with one
/// re-orthogonalization sweep per added vector.
struct SpanBasis {
    vectors: Vec<DVector<f64>>,
}

impl SpanBasis {
    fn new() -> Self {
        Self { vectors: Vec::new() }
    }

    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut res = x.clone();
        for _ in 0..2 {
            for b in &self.vectors {
                let c = b.dot(&res);
                res.axpy(-c, b, 1.0);
            }
        }
        res
    }

    fn distance(&self, x: &DVector<f64>) -> f64 {
        self.residual(x).norm()
    }

    fn push(&mut self, x: &DVector<f64>) -> bool {
        let res = self.residual(x);
        let norm = res.norm();
        if norm <= 0.0 {
            return false;
        }
        self.vectors.push(res / norm);
        true
    }
}

/// Index (into `candidates`) of the row farthest from the span, ties going to
/// the smaller word index. Rows already chosen are skipped.
fn farthest(
    rows: &[DVector<f64>],
    candidates: &[usize],
    basis: &SpanBasis,
    exclude: &[usize],
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (slot, &word) in candidates.iter().enumerate() {
        if exclude.contains(&word) {
            continue;
        }
        let d = basis.distance(&rows[slot]);
        match best {
            Some((_, bd)) if d <= bd => {}
            _ => best = Some((slot, d)),
        }
    }
    best
}

/// Picks r anchor words among `candidates` (words with a nonzero Q̄ row).
///
/// `projection_dim = None` uses [`projection_dim`]; the projection is skipped
/// whenever the target dimension is not smaller than n.
pub fn recover_anchors(
    qbar: &DMatrix<f64>,
    candidates: &[usize],
    r: usize,
    eps0: f64,
    projection_override: Option<usize>,
    seed: u64,
) -> Result<AnchorSet> {
    let n = qbar.ncols();
    if r == 0 {
        return Err(Error::InvalidDimensions("need at least one topic".into()));
    }
    if candidates.len() < r {
        return Err(Error::RankDeficient(format!(
            "only {} usable words for {r} topics",
            candidates.len()
        )));
    }
    let d = projection_override.unwrap_or_else(|| projection_dim(n, eps0)).min(n);

    let rows: Vec<DVector<f64>> = if d < n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (d as f64).sqrt();
        let proj = DMatrix::from_fn(n, d, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        });
        candidates
            .iter()
            .map(|&i| (qbar.row(i) * &proj).transpose())
            .collect()
    } else {
        candidates.iter().map(|&i| qbar.row(i).transpose()).collect()
    };

    let scale = rows.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let degenerate = |dist: f64| dist <= 1e-12 * scale.max(f64::MIN_POSITIVE);

    let mut chosen_slots: Vec<usize> = Vec::with_capacity(r);
    let mut basis = SpanBasis::new();
    for _ in 0..r {
        let chosen_words: Vec<usize> = chosen_slots.iter().map(|&s| candidates[s]).collect();
        let (slot, dist) = farthest(&rows, candidates, &basis, &chosen_words)
            .ok_or_else(|| Error::RankDeficient("ran out of candidate rows".into()))?;
        if degenerate(dist) {
            return Err(Error::RankDeficient(format!(
                "rows of Q̄ span fewer than {r} dimensions"
            )));
        }
        basis.push(&rows[slot]);
        chosen_slots.push(slot);
    }

    // One replacement pass, in order.
    for k in 0..r {
        let mut others = SpanBasis::new();
        for (j, &s) in chosen_slots.iter().enumerate() {
            if j != k {
                others.push(&rows[s]);
            }
        }
        let exclude: Vec<usize> = chosen_slots
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, &s)| candidates[s])
            .collect();
        if let Some((slot, dist)) = farthest(&rows, candidates, &others, &exclude) {
            if !degenerate(dist) {
                chosen_slots[k] = slot;
            }
        }
    }

    Ok(AnchorSet {
        indices: chosen_slots.iter().map(|&s| candidates[s]).collect(),
        projection_dim: d,
        seed,
    })
}
