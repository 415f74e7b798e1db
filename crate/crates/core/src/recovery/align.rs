//! Column alignment between a recovered and a reference topic matrix.
//! Topic order is not identifiable, so errors are measured after matching.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `perm[k]` is the recovered column matched to reference column k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub perm: Vec<usize>,
}

impl Alignment {
    pub fn identity(r: usize) -> Self {
        Self {
            perm: (0..r).collect(),
        }
    }

    /// Reorders the columns of a recovered n×r matrix into reference order.
    pub fn apply_columns(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(m.nrows(), self.perm.len(), |i, k| m[(i, self.perm[k])])
    }

    /// Reorders rows and columns of a recovered r×r matrix.
    pub fn apply_square(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let r = self.perm.len();
        DMatrix::from_fn(r, r, |i, j| m[(self.perm[i], self.perm[j])])
    }
}

/// Matches columns first through shared anchor words, then greedily by
/// smallest ℓ1 distance among the leftovers.
pub fn align_columns(
    recovered: &DMatrix<f64>,
    reference: &DMatrix<f64>,
    recovered_anchors: Option<&[usize]>,
    reference_anchors: Option<&[usize]>,
) -> Result<Alignment> {
    if recovered.shape() != reference.shape() {
        return Err(Error::ShapeMismatch(format!(
            "cannot align {:?} against {:?}",
            recovered.shape(),
            reference.shape()
        )));
    }
    let r = reference.ncols();
    let mut perm: Vec<Option<usize>> = vec![None; r];
    let mut used = vec![false; r];

    if let (Some(rec), Some(refa)) = (recovered_anchors, reference_anchors) {
        for (k_ref, w) in refa.iter().enumerate() {
            if let Some(k_rec) = rec.iter().position(|x| x == w) {
                if k_rec < r && !used[k_rec] {
                    perm[k_ref] = Some(k_rec);
                    used[k_rec] = true;
                }
            }
        }
    }

    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for k_ref in (0..r).filter(|&k| perm[k].is_none()) {
        for k_rec in (0..r).filter(|&k| !used[k]) {
            let dist: f64 = recovered
                .column(k_rec)
                .iter()
                .zip(reference.column(k_ref).iter())
                .map(|(a, b)| (a - b).abs())
                .sum();
            pairs.push((dist, k_ref, k_rec));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for (_, k_ref, k_rec) in pairs {
        if perm[k_ref].is_none() && !used[k_rec] {
            perm[k_ref] = Some(k_rec);
            used[k_rec] = true;
        }
    }
    Ok(Alignment {
        perm: perm.into_iter().map(|p| p.expect("every column matched")).collect(),
    })
}
