//! Dense numerical kernels: simplex and PSD projections, the pseudoinverse
//! and the simplex-constrained least-squares solver.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Euclidean projection onto the probability simplex {x ≥ 0, Σx = 1}.
///
/// Sort-based threshold: θ is chosen so that Σ max(v_i − θ, 0) = 1.
pub fn simplex_project(v: &[f64]) -> Vec<f64> {
    assert!(!v.is_empty(), "cannot project an empty vector");
    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

pub fn simplex_project_vec(v: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(simplex_project(v.as_slice()))
}

/// Projects every column of `m` onto the simplex.
pub fn simplex_project_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let p = simplex_project(col.as_slice());
        col.copy_from_slice(&p);
    }
    out
}

/// Frobenius-nearest PSD matrix to (M + Mᵀ)/2.
pub fn psd_project(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidDimensions(format!(
            "PSD projection of a {}×{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("PSD projection of a non-finite matrix".into()));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;
    let clamped = eig.eigenvalues.map(|l| l.max(0.0));
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&clamped) * v.transpose();
    Ok((&out + out.transpose()) * 0.5)
}

/// Thin SVD `a = U·diag(s)·Vᵀ`, checked by recomposition.
///
/// nalgebra's bidiagonal SVD occasionally returns wrong factors for
/// rank-deficient inputs, so a failed check falls back to the eigenvectors
/// of AᵀA with singular values measured as ‖A·v‖.
pub fn thin_svd(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale * (a.nrows().max(a.ncols()) as f64);
    let recompose_err = |u: &DMatrix<f64>, s: &DVector<f64>, v_t: &DMatrix<f64>| {
        (u * DMatrix::from_diagonal(s) * v_t - a).amax()
    };

    let svd = a.clone().svd(true, true);
    if let (Some(u), Some(v_t)) = (svd.u, svd.v_t) {
        if recompose_err(&u, &svd.singular_values, &v_t) <= tol {
            return Ok((u, svd.singular_values, v_t));
        }
    }

    let cols = a.ncols();
    let gram = a.transpose() * a;
    let eig = SymmetricEigen::try_new((&gram + gram.transpose()) * 0.5, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("eigensolver did not converge in SVD fallback".into()))?;
    let v = eig.eigenvectors;
    let av = a * &v;
    let s = DVector::from_iterator(cols, av.column_iter().map(|c| c.norm()));
    let s_max = s.iter().cloned().fold(0.0, f64::max);
    let mut u = DMatrix::zeros(a.nrows(), cols);
    for k in 0..cols {
        if s[k] > 1e-13 * s_max {
            u.set_column(k, &(av.column(k) / s[k]));
        }
    }
    let v_t = v.transpose();
    if recompose_err(&u, &s, &v_t) > tol.max(1e-10 * scale) {
        return Err(Error::Numerical("singular value decomposition failed".into()));
    }
    Ok((u, s, v_t))
}

/// Moore–Penrose pseudoinverse. Singular values below `rank_tol·σ_max` are
/// treated as zero.
pub fn pseudoinverse(a: &DMatrix<f64>, rank_tol: f64) -> Result<DMatrix<f64>> {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return Ok(DMatrix::zeros(cols, rows));
    }
    let (u, s, v_t) = thin_svd(a)?;
    let s_max = s.iter().cloned().fold(0.0, f64::max);
    let cutoff = rank_tol * s_max;
    let inv = s.map(|x| if x > cutoff && x > 0.0 { 1.0 / x } else { 0.0 });
    Ok(v_t.transpose() * DMatrix::from_diagonal(&inv) * u.transpose())
}

pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    match thin_svd(a) {
        Ok((_, s, _)) => s,
        Err(_) => a.clone().svd(false, false).singular_values,
    }
}

pub fn min_singular_value(a: &DMatrix<f64>) -> f64 {
    singular_values(a).iter().cloned().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Stop once the gradient-mapping norm is at most this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LsqSolution {
    pub coefficients: DVector<f64>,
    pub iterations: usize,
    /// Gradient-mapping norm at the returned point.
    pub residual: f64,
}

/// min over the simplex of ‖q − Pᵀv‖² for a fixed r×n basis P.
///
/// Everything that only depends on P (Gram matrix, step size, Cholesky factor
/// for the unconstrained minimizer) is computed once and shared by all the
/// right-hand sides.
#[derive(Debug, Clone)]
pub struct SimplexLsq {
    basis: DMatrix<f64>,
    gram: DMatrix<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    step: f64,
}

impl SimplexLsq {
    pub const MIN_SINGULAR_VALUE: f64 = 1e-10;

    /// `basis` holds one row per anchor.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let sigma_min = min_singular_value(&basis);
        if !(sigma_min > Self::MIN_SINGULAR_VALUE) || basis.nrows() > basis.ncols() {
            return Err(Error::RankDeficient(format!(
                "anchor rows are not linearly independent (σ_min = {sigma_min:e})"
            )));
        }
        let gram = &basis * basis.transpose();
        let gram = (&gram + gram.transpose()) * 0.5;
        let lambda_max = gram
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        let chol = gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::RankDeficient("anchor Gram matrix is not positive definite".into()))?;
        Ok(Self {
            basis,
            gram,
            chol,
            step: 1.0 / (2.0 * lambda_max),
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// The Hessian 2·P·Pᵀ of the objective.
    pub fn hessian(&self) -> DMatrix<f64> {
        &self.gram * 2.0
    }

    /// P·q, the linear term of the objective.
    pub fn rhs(&self, q: &DVector<f64>) -> DVector<f64> {
        &self.basis * q
    }

    pub fn objective(&self, q: &DVector<f64>, v: &DVector<f64>) -> f64 {
        (q - self.basis.transpose() * v).norm_squared()
    }

    pub fn gradient(&self, q: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        (&self.gram * v - self.rhs(q)) * 2.0
    }

    /// Solves H x = y with the cached factorization of P·Pᵀ.
    pub fn solve_hessian(&self, y: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(y) * 0.5
    }

    /// argmin over all of ℝʳ, i.e. (P·Pᵀ)⁻¹·P·q.
    pub fn unconstrained_minimizer(&self, q: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(&self.rhs(q))
    }

    fn mapping_norm(&self, b: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let grad = (&self.gram * v - b) * 2.0;
        let next = simplex_project_vec(&(v - &grad * self.step));
        (v - next).norm() / self.step
    }

    /// Projected gradient from the barycenter with step 1/(2λ_max), plus
    /// Nesterov momentum with gradient-based restart.
    ///
    /// The projected unconstrained minimizer is tried first and returned when
    /// its gradient mapping already certifies it. That is the point a Newton
    /// refresh produces, so an empty deletion reproduces training exactly
    /// whenever the shortcut applies.
    pub fn solve(&self, q: &DVector<f64>, opts: &SolverOptions) -> Result<LsqSolution> {
        let r = self.dim();
        let b = self.rhs(q);
        let shortcut = simplex_project_vec(&self.chol.solve(&b));
        let residual = self.mapping_norm(&b, &shortcut);
        if residual <= opts.tol {
            return Ok(LsqSolution {
                coefficients: shortcut,
                iterations: 0,
                residual,
            });
        }
        let mut x = DVector::from_element(r, 1.0 / r as f64);
        let mut y = x.clone();
        let mut t = 1.0f64;
        let mut residual = f64::INFINITY;
        for iter in 0..opts.max_iter {
            let grad = (&self.gram * &y - &b) * 2.0;
            let x_next = simplex_project_vec(&(&y - &grad * self.step));
            let mapped = (&y - &x_next).norm() / self.step;
            if mapped <= opts.tol {
                residual = self.mapping_norm(&b, &x_next);
                if residual <= opts.tol {
                    return Ok(LsqSolution {
                        coefficients: x_next,
                        iterations: iter + 1,
                        residual,
                    });
                }
            }
            let restart = grad.dot(&(&x_next - &x)) > 0.0;
            if restart {
                t = 1.0;
                y = x_next.clone();
            } else {
                let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
                y = &x_next + (&x_next - &x) * ((t - 1.0) / t_next);
                t = t_next;
            }
            x = x_next;
            residual = mapped;
        }
        Err(Error::NonConvergence {
            iterations: opts.max_iter,
            residual,
            last_iterate: x.as_slice().to_vec(),
        })
    }
}
