//! Downstream heads on frozen topic features: tuning, the naive release
//! (re-fit on the unlearned base model) and the realistic release that moves
//! only the head and leaves the stored base model untouched.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recovery::{min_singular_value, pseudoinverse, TrainedModel};
use crate::synth::TaskSpec;
use crate::unlearn::{
    anchor_stability_bound, check_capacity, floor_count, gaussian_noise, sensitivity_kernel,
    unlearn_base, unlearn_pre_noise, BaseUnlearnOutput, NoiseSpec, UnlearnConfig, STREAM_V,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// ln(1 + exp(−y·s)).
    Logistic,
    /// ½(s − y)².
    Quadratic,
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(Self::Logistic),
            "quadratic" => Ok(Self::Quadratic),
            other => Err(Error::InvalidParameter(format!("unknown loss {other:?}"))),
        }
    }
}

impl LossKind {
    fn value(self, s: f64, y: f64) -> f64 {
        match self {
            Self::Logistic => softplus(-y * s),
            Self::Quadratic => 0.5 * (s - y) * (s - y),
        }
    }

    fn d1(self, s: f64, y: f64) -> f64 {
        match self {
            Self::Logistic => -y * sigmoid(-y * s),
            Self::Quadratic => s - y,
        }
    }

    fn d2(self, s: f64, y: f64) -> f64 {
        match self {
            Self::Logistic => {
                let p = sigmoid(y * s);
                p * (1.0 - p)
            }
            Self::Quadratic => 1.0,
        }
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Topic features Aᵀx of every example, stacked as an N×r matrix.
pub fn embed(a: &DMatrix<f64>, task: &TaskSpec) -> Result<DMatrix<f64>> {
    if task.dataset.is_empty() {
        return Err(Error::InvalidTask("dataset is empty".into()));
    }
    if task.vocab_size() != a.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "task has {} words, topic matrix {}",
            task.vocab_size(),
            a.nrows()
        )));
    }
    Ok(task.design_matrix() * a)
}

/// (1/N)·Σ f(zᵀw, y) + (λ/2)‖w‖² over precomputed features z.
#[derive(Debug, Clone)]
pub struct HeadObjective {
    pub features: DMatrix<f64>,
    pub labels: DVector<f64>,
    pub lambda: f64,
    pub loss: LossKind,
}

impl HeadObjective {
    pub fn new(a: &DMatrix<f64>, task: &TaskSpec, lambda: f64, loss: LossKind) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self {
            features: embed(a, task)?,
            labels: task.labels(),
            lambda,
            loss,
        })
    }

    fn n(&self) -> f64 {
        self.features.nrows() as f64
    }

    pub fn value(&self, w: &DVector<f64>) -> f64 {
        let s = &self.features * w;
        let data: f64 = s
            .iter()
            .zip(self.labels.iter())
            .map(|(&s, &y)| self.loss.value(s, y))
            .sum();
        data / self.n() + 0.5 * self.lambda * w.norm_squared()
    }

    /// Gradient of the data term alone.
    pub fn data_gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        let s = &self.features * w;
        let d1 = DVector::from_iterator(
            s.len(),
            s.iter().zip(self.labels.iter()).map(|(&s, &y)| self.loss.d1(s, y)),
        );
        self.features.transpose() * d1 / self.n()
    }

    pub fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        self.data_gradient(w) + w * self.lambda
    }

    pub fn hessian(&self, w: &DVector<f64>) -> DMatrix<f64> {
        let r = self.features.ncols();
        let s = &self.features * w;
        let mut weighted = self.features.clone();
        for (i, mut row) in weighted.row_iter_mut().enumerate() {
            row *= self.loss.d2(s[i], self.labels[i]);
        }
        let h = self.features.transpose() * weighted / self.n();
        (&h + h.transpose()) * 0.5 + DMatrix::identity(r, r) * self.lambda
    }

    fn newton_direction(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        let g = self.gradient(w);
        let chol = self
            .hessian(w)
            .cholesky()
            .ok_or_else(|| Error::RankDeficient("head Hessian is not positive definite".into()))?;
        Ok(-chol.solve(&g))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadModel {
    pub w: Vec<f64>,
    pub lambda_reg: f64,
    pub loss_kind: LossKind,
    pub converged_grad_norm: f64,
    /// ‖∇(data term)(0)‖/λ, which bounds ‖w*‖ by strong convexity.
    pub norm_bound: f64,
}

impl HeadModel {
    pub fn weights(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.w)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HeadOptions {
    pub lambda: f64,
    pub loss: LossKind,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for HeadOptions {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            loss: LossKind::Logistic,
            tol: 1e-12,
            max_iter: 100,
        }
    }
}

/// Damped Newton from w = 0 with Armijo backtracking.
pub fn head_tune(a: &DMatrix<f64>, task: &TaskSpec, opts: &HeadOptions) -> Result<HeadModel> {
    let obj = HeadObjective::new(a, task, opts.lambda, opts.loss)?;
    let r = a.ncols();
    let mut w = DVector::zeros(r);
    let norm_bound = obj.data_gradient(&w).norm() / opts.lambda;
    let mut grad_norm = obj.gradient(&w).norm();
    for _ in 0..opts.max_iter {
        if grad_norm <= opts.tol {
            break;
        }
        let dir = obj.newton_direction(&w)?;
        let mut next = &w + &dir;
        let mut next_grad = obj.gradient(&next).norm();
        // Close to the optimum objective differences drown in round-off, so
        // a full step that shrinks the gradient is taken without a line search.
        if next_grad >= grad_norm || grad_norm > 1e-6 {
            let f0 = obj.value(&w);
            let slope = obj.gradient(&w).dot(&dir);
            let mut t = 1.0;
            while obj.value(&next) > f0 + 1e-4 * t * slope && t > 1e-10 {
                t *= 0.5;
                next = &w + &dir * t;
            }
            next_grad = obj.gradient(&next).norm();
            if next_grad >= grad_norm && t <= 1e-10 {
                break;
            }
        }
        w = next;
        grad_norm = next_grad;
    }
    if !(grad_norm <= opts.tol) {
        return Err(Error::NonConvergence {
            iterations: opts.max_iter,
            residual: grad_norm,
            last_iterate: w.as_slice().to_vec(),
        });
    }
    Ok(HeadModel {
        w: w.as_slice().to_vec(),
        lambda_reg: opts.lambda,
        loss_kind: opts.loss,
        converged_grad_norm: grad_norm,
        norm_bound,
    })
}

/// Normal-equation solution of the quadratic-loss head, used as an oracle.
pub fn ridge_closed_form(a: &DMatrix<f64>, task: &TaskSpec, lambda: f64) -> Result<DVector<f64>> {
    let f = embed(a, task)?;
    let n = f.nrows() as f64;
    let r = f.ncols();
    let lhs = f.transpose() * &f / n + DMatrix::identity(r, r) * lambda;
    let rhs = f.transpose() * task.labels() / n;
    lhs.cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or_else(|| Error::RankDeficient("ridge normal equations are singular".into()))
}

/// w̄ = w^S − H⁻¹·∇ℓ(w^S; Ā), with H the Hessian at (w^S; Ā).
pub fn head_newton_unlearn(
    w_s: &DVector<f64>,
    a_bar: &DMatrix<f64>,
    task: &TaskSpec,
    lambda: f64,
    loss: LossKind,
) -> Result<DVector<f64>> {
    let obj = HeadObjective::new(a_bar, task, lambda, loss)?;
    Ok(w_s + obj.newton_direction(w_s)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessConstants {
    pub lambda: f64,
    /// Lipschitz constant of ℓ in w.
    pub lip_l: f64,
    /// Lipschitz constant of the Hessian in w.
    pub lip_l2: f64,
    /// Lipschitz constant of ∇_w ℓ in A under the entrywise max norm.
    pub lip_linf: f64,
}

/// Dataset-dependent smoothness constants over the ball ‖w‖ ≤ B.
///
/// With z = Aᵀx, |f'| ≤ F1 and |f''| ≤ F2 on that ball:
/// L = max‖z‖·F1 + λB, L₂ = sup|f'''|·mean‖z‖³, and
/// L_∞ = mean √r·‖x‖₁·(F1 + F2·B·‖z‖), since an entrywise-h change of A
/// moves z by at most √r·‖x‖₁·h and zᵀw by at most ‖x‖₁·√r·B·h.
pub fn smoothness_constants(
    a: &DMatrix<f64>,
    task: &TaskSpec,
    lambda: f64,
    loss: LossKind,
    head_norm: f64,
) -> Result<SmoothnessConstants> {
    let z = embed(a, task)?;
    let r = a.ncols() as f64;
    let n = z.nrows() as f64;
    let mut max_z = 0.0f64;
    let mut cube = 0.0;
    let mut linf = 0.0;
    let mut f1_max = 0.0f64;
    for (i, row) in z.row_iter().enumerate() {
        let zn = row.norm();
        let x1: f64 = task.dataset[i].counts.iter().map(|&c| c as f64).sum();
        let (f1, f2) = match loss {
            LossKind::Logistic => (1.0, 0.25),
            LossKind::Quadratic => (1.0 + head_norm * zn, 1.0),
        };
        max_z = max_z.max(zn);
        f1_max = f1_max.max(f1);
        cube += zn * zn * zn;
        linf += r.sqrt() * x1 * (f1 + f2 * head_norm * zn);
    }
    // sup |σ''| = 1/(6√3) < 0.1 for the logistic loss; quadratic has f''' = 0.
    let third = match loss {
        LossKind::Logistic => 0.1,
        LossKind::Quadratic => 0.0,
    };
    Ok(SmoothnessConstants {
        lambda,
        lip_l: max_z * f1_max + lambda * head_norm,
        lip_l2: third * cube / n,
        lip_linf: linf / n,
    })
}

/// Δ_v and its three terms, before the leading c_v/p factor is applied to
/// the sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityV {
    pub kernel: f64,
    /// √r·(L_∞/λ)·K: head drift from the base-model change.
    pub head_term: f64,
    /// B·√(nr)·K/(q·a·r): base-model change seen through the head.
    pub shift_term: f64,
    /// K²·√(nr).
    pub second_order_term: f64,
    pub total: f64,
}

pub fn sensitivity_v(
    cfg: &UnlearnConfig,
    constants: &SmoothnessConstants,
    head_norm: f64,
    q: f64,
    m: usize,
    m_u: usize,
    n: usize,
    r: usize,
) -> Result<SensitivityV> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidParameter(format!("q must lie in (0, 1], got {q}")));
    }
    let k = sensitivity_kernel(cfg, m, m_u, r)?;
    let rf = r as f64;
    let snr = ((n * r) as f64).sqrt();
    let head_term = rf.sqrt() * constants.lip_linf / constants.lambda * k;
    let shift_term = head_norm * snr * k / (q * cfg.a_imbalance * rf);
    let second_order_term = k * k * snr;
    let total = cfg.c_sens_v / cfg.p_sep * (head_term + shift_term + second_order_term);
    Ok(SensitivityV {
        kernel: k,
        head_term,
        shift_term,
        second_order_term,
        total,
    })
}

/// floor(c·min{ m·q·ε/(r·√(n·r·ln(1/δ))), 0.001·m/r² }).
pub fn deletion_capacity_downstream(
    cfg: &UnlearnConfig,
    m: usize,
    n: usize,
    r: usize,
    q: f64,
) -> Result<usize> {
    let utility = 0.001 * m as f64 / (r * r) as f64;
    let privacy = capacity_privacy_term_downstream(cfg, m, n, r, q)?;
    Ok(floor_count(cfg.c_cap * privacy.min(utility)))
}

/// The privacy branch m·q·ε/(r·√(n·r·ln(1/δ))) of the downstream capacity.
pub fn capacity_privacy_term_downstream(
    cfg: &UnlearnConfig,
    m: usize,
    n: usize,
    r: usize,
    q: f64,
) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidParameter(format!("q must lie in (0, 1], got {q}")));
    }
    let (mf, nf, rf) = (m as f64, n as f64, r as f64);
    Ok(mf * q * cfg.epsilon / (rf * (nf * rf * (1.0 / cfg.delta).ln()).sqrt()))
}

#[derive(Debug, Clone)]
pub struct NaiveRelease {
    pub base: BaseUnlearnOutput,
    pub head: HeadModel,
}

/// Base unlearning followed by a fresh head fit on the released Ã.
pub fn unlearn_naive(
    trained: &TrainedModel,
    forget: &[Vec<usize>],
    task: &TaskSpec,
    cfg: &UnlearnConfig,
    head_opts: &HeadOptions,
    seed: u64,
) -> Result<NaiveRelease> {
    let base = unlearn_base(trained, forget, cfg, seed)?;
    let head = head_tune(&base.released.topics, task, head_opts)?;
    Ok(NaiveRelease { base, head })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FineTunedRelease {
    /// ṽ = v̄ + ξ, the released head in the basis of the stored A^S.
    pub v_tilde: Vec<f64>,
    /// A^S·ṽ.
    pub b_vector: Vec<f64>,
    pub noise: NoiseSpec,
    /// v̄ = (A^S)†·Ā·w̄.
    pub v_bar: Vec<f64>,
    /// Newton-updated head against Ā.
    pub w_bar: Vec<f64>,
    pub sensitivity: SensitivityV,
    pub constants: SmoothnessConstants,
    pub forgotten: usize,
    pub capacity: usize,
    pub anchor_bound: usize,
    pub elapsed: Duration,
}

/// The head-only release: Algorithm 1 without its noise, a Newton step on
/// the head, re-expression in the stored basis, then the Gaussian mechanism.
pub fn unlearn_realistic(
    trained: &TrainedModel,
    head: &HeadModel,
    forget: &[Vec<usize>],
    task: &TaskSpec,
    cfg: &UnlearnConfig,
    seed: u64,
) -> Result<FineTunedRelease> {
    let start = Instant::now();
    cfg.validate()?;
    let a_s = &trained.model.topics;
    let (n, r) = a_s.shape();
    let m = trained.stats.num_docs;
    let m_u = forget.len();
    let capacity = deletion_capacity_downstream(cfg, m, n, r, task.q)?;
    let anchor_bound = anchor_stability_bound(cfg, m, r);
    check_capacity(m_u, capacity, anchor_bound)?;

    let sigma_min = min_singular_value(a_s);
    let sigma_max = crate::recovery::singular_values(a_s).max();
    if !(sigma_min > cfg.rank_tol * sigma_max) {
        return Err(Error::RankDeficient(format!(
            "stored topic matrix is rank deficient (σ_min = {sigma_min:e})"
        )));
    }

    let pre = unlearn_pre_noise(trained, forget, cfg.rank_tol)?;
    let w_s = head.weights();
    let w_bar = head_newton_unlearn(&w_s, &pre.topics, task, head.lambda_reg, head.loss_kind)?;
    let v_bar = pseudoinverse(a_s, cfg.rank_tol)? * &pre.topics * &w_bar;

    let head_norm = head.norm_bound;
    let constants = smoothness_constants(a_s, task, head.lambda_reg, head.loss_kind, head_norm)?;
    let sensitivity = sensitivity_v(cfg, &constants, head_norm, task.q, m, m_u, n, r)?;
    let noise = NoiseSpec::new(sensitivity.total, cfg, seed)?;
    let xi = gaussian_noise(r, 1, noise.sigma, seed, STREAM_V).column(0).into_owned();
    let v_tilde = &v_bar + xi;
    let b_vector = a_s * &v_tilde;

    Ok(FineTunedRelease {
        v_tilde: v_tilde.as_slice().to_vec(),
        b_vector: b_vector.as_slice().to_vec(),
        noise,
        v_bar: v_bar.as_slice().to_vec(),
        w_bar: w_bar.as_slice().to_vec(),
        sensitivity,
        constants,
        forgotten: m_u,
        capacity,
        anchor_bound,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_task, GroundTruth, TaskParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(seed: u64) -> (GroundTruth, TaskSpec) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gt = GroundTruth::generate(30, 3, 0.3, &[0.5; 3], &mut rng).unwrap();
        let params = TaskParams {
            topic_subset: vec![0, 1],
            dataset_size: 300,
            label_noise: 0.1,
            head_norm: 3.0,
            doc_len: 20,
        };
        let task = generate_task(&gt, &params, &mut rng).unwrap();
        (gt, task)
    }

    fn perturb(a: &DMatrix<f64>, h: f64, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        a.map(|v| v + h * rng.random_range(-1.0..1.0))
    }

    #[test]
    fn quadratic_head_matches_normal_equations() {
        let (gt, task) = setup(1);
        let opts = HeadOptions {
            loss: LossKind::Quadratic,
            ..HeadOptions::default()
        };
        let head = head_tune(&gt.a_star, &task, &opts).unwrap();
        let oracle = ridge_closed_form(&gt.a_star, &task, opts.lambda).unwrap();
        assert!((head.weights() - oracle).amax() < 1e-10);
    }

    #[test]
    fn logistic_head_converges_and_respects_shrinkage() {
        let (gt, task) = setup(2);
        for lambda in [0.01, 1.0, 100.0] {
            let opts = HeadOptions {
                lambda,
                ..HeadOptions::default()
            };
            let head = head_tune(&gt.a_star, &task, &opts).unwrap();
            let obj = HeadObjective::new(&gt.a_star, &task, lambda, LossKind::Logistic).unwrap();
            assert!(obj.gradient(&head.weights()).norm() <= opts.tol);
            assert!(head.weights().norm() <= head.norm_bound + 1e-12);
        }
    }

    #[test]
    fn newton_at_optimum_is_fixed() {
        let (gt, task) = setup(3);
        let head = head_tune(&gt.a_star, &task, &HeadOptions::default()).unwrap();
        let w_bar =
            head_newton_unlearn(&head.weights(), &gt.a_star, &task, 0.1, LossKind::Logistic)
                .unwrap();
        assert!((w_bar - head.weights()).amax() < 1e-12);
    }

    #[test]
    fn quadratic_newton_is_exact_refit() {
        let (gt, task) = setup(4);
        let opts = HeadOptions {
            loss: LossKind::Quadratic,
            ..HeadOptions::default()
        };
        let head = head_tune(&gt.a_star, &task, &opts).unwrap();
        let a_bar = perturb(&gt.a_star, 0.01, 5);
        let w_bar =
            head_newton_unlearn(&head.weights(), &a_bar, &task, opts.lambda, opts.loss).unwrap();
        let refit = ridge_closed_form(&a_bar, &task, opts.lambda).unwrap();
        assert!((w_bar - refit).amax() < 1e-10);
    }

    #[test]
    fn logistic_newton_error_is_second_order() {
        let (gt, task) = setup(6);
        let opts = HeadOptions::default();
        let head = head_tune(&gt.a_star, &task, &opts).unwrap();
        let err = |h: f64| {
            let a_bar = perturb(&gt.a_star, h, 7);
            let w_bar =
                head_newton_unlearn(&head.weights(), &a_bar, &task, opts.lambda, opts.loss)
                    .unwrap();
            let refit = head_tune(&a_bar, &task, &opts).unwrap().weights();
            (w_bar - refit).norm()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((3.0..=6.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn newton_error_within_lemma_bound() {
        let (gt, task) = setup(8);
        let opts = HeadOptions::default();
        let head = head_tune(&gt.a_star, &task, &opts).unwrap();
        let c = smoothness_constants(&gt.a_star, &task, opts.lambda, opts.loss, head.norm_bound)
            .unwrap();
        for seed in 0..5 {
            let a_bar = perturb(&gt.a_star, 0.01, seed);
            let h = (&a_bar - &gt.a_star).amax();
            let w_bar =
                head_newton_unlearn(&head.weights(), &a_bar, &task, opts.lambda, opts.loss)
                    .unwrap();
            let refit = head_tune(&a_bar, &task, &opts).unwrap().weights();
            let bound = c.lip_l2 * c.lip_linf.powi(2) / (2.0 * opts.lambda.powi(3)) * h * h;
            assert!((w_bar - refit).norm() <= bound);
        }
    }

    #[test]
    fn erm_lipschitz_in_base_model() {
        let (gt, task) = setup(9);
        let opts = HeadOptions::default();
        let w0 = head_tune(&gt.a_star, &task, &opts).unwrap();
        let c = smoothness_constants(&gt.a_star, &task, opts.lambda, opts.loss, w0.norm_bound)
            .unwrap();
        for seed in 0..5 {
            let a1 = perturb(&gt.a_star, 0.005, seed);
            let a2 = perturb(&gt.a_star, 0.005, seed + 100);
            let w1 = head_tune(&a1, &task, &opts).unwrap().weights();
            let w2 = head_tune(&a2, &task, &opts).unwrap().weights();
            assert!((w1 - w2).norm() <= c.lip_linf / opts.lambda * (&a1 - &a2).amax());
        }
    }

    fn unit_cfg() -> UnlearnConfig {
        UnlearnConfig {
            epsilon: 1.0,
            delta: (-1.0f64).exp(),
            eps0: 1.0,
            gamma: 1.0,
            p_sep: 1.0,
            a_imbalance: 1.0,
            ..UnlearnConfig::default()
        }
    }

    #[test]
    fn sensitivity_v_terms() {
        let cfg = unit_cfg();
        let c = SmoothnessConstants {
            lambda: 0.5,
            lip_l: 1.0,
            lip_l2: 1.0,
            lip_linf: 2.0,
        };
        assert_eq!(sensitivity_v(&cfg, &c, 2.0, 0.5, 100, 0, 9, 4).unwrap().total, 0.0);
        let s = sensitivity_v(&cfg, &c, 2.0, 0.25, 100, 3, 9, 4).unwrap();
        let k = sensitivity_kernel(&cfg, 100, 3, 4).unwrap();
        // q = 1/(ar) recovers B·√(nr)·K
        assert!((s.shift_term - 2.0 * 6.0 * k).abs() < 1e-12);
        let doubled = sensitivity_v(&cfg, &c, 2.0, 0.5, 100, 3, 9, 4).unwrap();
        assert!((doubled.shift_term - s.shift_term / 2.0).abs() < 1e-12);
        assert_eq!(doubled.head_term, s.head_term);
        assert_eq!(doubled.second_order_term, s.second_order_term);
        assert!(sensitivity_v(&cfg, &c, 2.0, 0.0, 100, 3, 9, 4).is_err());
    }

    #[test]
    fn downstream_capacity_examples() {
        let cfg = unit_cfg();
        let (m, n, r) = (1_000_000, 10_000, 10);
        // first branch: 10⁶/(10·√(10⁵)) = 316.2 vs utility branch 10
        let big = UnlearnConfig {
            c_cap: 1.0,
            ..cfg.clone()
        };
        let first = m as f64 / (r as f64 * ((n * r) as f64).sqrt());
        assert!((first - 316.227766).abs() < 1e-5);
        assert_eq!(deletion_capacity_downstream(&big, m, n, r, 1.0).unwrap(), 10);
        let tiny = UnlearnConfig {
            epsilon: 1e-3,
            ..cfg
        };
        let one = deletion_capacity_downstream(&tiny, 400_000_000, n, r, 0.1).unwrap();
        let two = deletion_capacity_downstream(&tiny, 400_000_000, n, r, 0.2).unwrap();
        // 4·10⁷·10⁻³/(10·√(10⁵)) = 12.65 and twice that
        assert_eq!(one, 12);
        assert_eq!(two, 25);
    }
}
