//! Base-model unlearning: downdate the statistics, refresh C with one
//! projected Newton step per word against the stored anchors, rebuild A and
//! R, then release them through the Gaussian mechanism.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cooccur::{remove_documents, CooccurrenceStats};
use crate::error::{Error, Result};
use crate::recovery::{
    anchor_rows, assemble_topics, min_singular_value, psd_project, simplex_project_columns,
    simplex_project_vec, AnchorSet, SimplexLsq, TopicModel, TrainedModel, DEFAULT_RANK_TOL,
};
use crate::synth::GroundTruth;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlearnConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub eps0: f64,
    pub gamma: f64,
    pub p_sep: f64,
    pub a_imbalance: f64,
    /// Hidden constant of the A-sensitivity.
    pub c_sens_a: f64,
    /// Hidden constant of the R-sensitivity.
    pub c_sens_r: f64,
    /// Hidden constant of the downstream head sensitivity.
    pub c_sens_v: f64,
    /// Hidden constant of both deletion capacities.
    pub c_cap: f64,
    /// Multiplier on the anchor-stability bound 0.001·m·ε₀·(γp)³/(a²r²).
    pub c_anchor: f64,
    pub noise_enabled: bool,
    pub rank_tol: f64,
}

impl Default for UnlearnConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            delta: 1e-5,
            eps0: 0.1,
            gamma: 1.0,
            p_sep: 1.0,
            a_imbalance: 1.0,
            c_sens_a: 1.0,
            c_sens_r: 1.0,
            c_sens_v: 1.0,
            c_cap: 1.0,
            c_anchor: 1.0,
            noise_enabled: true,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

impl UnlearnConfig {
    /// Structural constants taken from a known ground truth.
    pub fn from_truth(gt: &GroundTruth) -> Self {
        Self {
            gamma: gt.gamma,
            p_sep: gt.p_sep,
            a_imbalance: gt.a_imbalance,
            ..Self::default()
        }
    }

    /// Plug-in estimates from a trained model: γ as σ_min(R), p as the
    /// smallest anchor entry of A, and topic probabilities as R·1.
    pub fn with_model_estimates(mut self, trained: &TrainedModel) -> Self {
        let model = &trained.model;
        let r = model.num_topics();
        self.gamma = min_singular_value(&model.topic_covariance);
        self.p_sep = trained
            .anchors
            .indices
            .iter()
            .enumerate()
            .map(|(k, &w)| model.topics[(w, k)])
            .fold(f64::INFINITY, f64::min);
        let probs = &model.topic_covariance * DVector::from_element(r, 1.0);
        let max = probs.max();
        let min = probs.min();
        self.a_imbalance = if min > 0.0 { max / min } else { f64::INFINITY };
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epsilon", self.epsilon),
            ("eps0", self.eps0),
            ("gamma", self.gamma),
            ("p_sep", self.p_sep),
            ("a_imbalance", self.a_imbalance),
            ("c_sens_a", self.c_sens_a),
            ("c_sens_r", self.c_sens_r),
            ("c_sens_v", self.c_sens_v),
            ("c_cap", self.c_cap),
            ("c_anchor", self.c_anchor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// ℓ₂-sensitivity Δ of the released quantity.
    pub delta_sensitivity: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(delta_sensitivity: f64, cfg: &UnlearnConfig, seed: u64) -> Result<Self> {
        let sigma = if cfg.noise_enabled {
            gaussian_sigma(delta_sensitivity, cfg.epsilon, cfg.delta)?
        } else {
            0.0
        };
        Ok(Self {
            delta_sensitivity,
            sigma,
            seed,
        })
    }
}

/// σ = (Δ/ε)·√(2·ln(1.25/δ)).
pub fn gaussian_sigma(delta_sensitivity: f64, epsilon: f64, delta: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    if delta_sensitivity < 0.0 {
        return Err(Error::InvalidParameter("sensitivity cannot be negative".into()));
    }
    Ok(delta_sensitivity / epsilon * (2.0 * (1.25 / delta).ln()).sqrt())
}

fn check_counts(m: usize, m_u: usize) -> Result<()> {
    if m_u >= m {
        return Err(Error::InvalidSize(format!(
            "cannot delete {m_u} of {m} documents"
        )));
    }
    Ok(())
}

/// K = (a·r)²·m_U / (m·ε₀·γ·p), shared by every sensitivity bound.
pub fn sensitivity_kernel(cfg: &UnlearnConfig, m: usize, m_u: usize, r: usize) -> Result<f64> {
    check_counts(m, m_u)?;
    let ar = cfg.a_imbalance * r as f64;
    Ok(ar * ar * m_u as f64 / (m as f64 * cfg.eps0 * cfg.gamma * cfg.p_sep))
}

/// Δ_A = c·√(nr)·K.
pub fn sensitivity_a(cfg: &UnlearnConfig, m: usize, m_u: usize, n: usize, r: usize) -> Result<f64> {
    let k = sensitivity_kernel(cfg, m, m_u, r)?;
    Ok(cfg.c_sens_a * ((n * r) as f64).sqrt() * k)
}

/// Δ_R = c_R·Δ_A·√(nr)/p, using √(nr)/p as an operator-norm bound on Ā†.
pub fn sensitivity_r(cfg: &UnlearnConfig, m: usize, m_u: usize, n: usize, r: usize) -> Result<f64> {
    let da = sensitivity_a(cfg, m, m_u, n, r)?;
    Ok(cfg.c_sens_r * da * ((n * r) as f64).sqrt() / cfg.p_sep)
}

/// floor(c·min{ m·ε/(r²·√(r·n·ln(1/δ))), 0.001·m/r² }).
pub fn deletion_capacity_base(cfg: &UnlearnConfig, m: usize, n: usize, r: usize) -> usize {
    let utility = 0.001 * m as f64 / (r * r) as f64;
    floor_count(cfg.c_cap * capacity_privacy_term_base(cfg, m, n, r).min(utility))
}

/// The privacy branch m·ε/(r²·√(r·n·ln(1/δ))) of the base capacity.
pub fn capacity_privacy_term_base(cfg: &UnlearnConfig, m: usize, n: usize, r: usize) -> f64 {
    let (m, n, r) = (m as f64, n as f64, r as f64);
    m * cfg.epsilon / (r * r * (r * n * (1.0 / cfg.delta).ln()).sqrt())
}

/// Largest deletion for which the stored anchors provably stay correct:
/// c_anchor·0.001·m·ε₀·(γp)³/(a²r²).
pub fn anchor_stability_bound(cfg: &UnlearnConfig, m: usize, r: usize) -> usize {
    let gp = cfg.gamma * cfg.p_sep;
    let ar = cfg.a_imbalance * r as f64;
    floor_count(cfg.c_anchor * 0.001 * m as f64 * cfg.eps0 * gp * gp * gp / (ar * ar))
}

pub(crate) fn floor_count(x: f64) -> usize {
    // Guard against 9.999999 from rounding in an exact-integer formula.
    let rounded = x.round();
    let v = if (x - rounded).abs() <= 1e-9 * rounded.abs().max(1.0) {
        rounded
    } else {
        x.floor()
    };
    if v.is_finite() && v > 0.0 {
        v as usize
    } else {
        0
    }
}

/// One Newton step on L(v) = ‖q̄ᵢ − vᵀQ̄_P‖² from `c_prev`, then projection.
///
/// L is quadratic, so c − H⁻¹∇L(c) equals the unconstrained minimizer for
/// every c. The right-hand side H·c − ∇L(c) = 2·Q̄_P·q̄ᵢ is formed directly,
/// which makes the result bit-identical for every starting point.
pub fn newton_update_c(
    c_prev: &DVector<f64>,
    qbar_i: &DVector<f64>,
    solver: &SimplexLsq,
) -> Result<DVector<f64>> {
    if c_prev.len() != solver.dim() {
        return Err(Error::InvalidDimensions(format!(
            "coefficient vector has {} entries for {} anchors",
            c_prev.len(),
            solver.dim()
        )));
    }
    let rhs = solver.rhs(qbar_i) * 2.0;
    Ok(simplex_project_vec(&solver.solve_hessian(&rhs)))
}

/// Per-entry seed for the noise stream `stream`, so noise does not depend on
/// evaluation order.
pub fn entry_seed(seed: u64, stream: u64, row: usize, col: usize) -> u64 {
    let mut z = seed;
    for v in [stream, row as u64, col as u64] {
        z = splitmix(z ^ splitmix(v.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    z
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub const STREAM_A: u64 = 1;
pub const STREAM_R: u64 = 2;
pub const STREAM_V: u64 = 3;

/// σ·N(0, 1) entries, each drawn from its own seeded generator.
pub fn gaussian_noise(rows: usize, cols: usize, sigma: f64, seed: u64, stream: u64) -> DMatrix<f64> {
    if sigma == 0.0 {
        return DMatrix::zeros(rows, cols);
    }
    let data: Vec<f64> = (0..rows * cols)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % rows, idx / rows);
            let mut rng = ChaCha8Rng::seed_from_u64(entry_seed(seed, stream, i, j));
            let z: f64 = StandardNormal.sample(&mut rng);
            sigma * z
        })
        .collect();
    DMatrix::from_vec(rows, cols, data)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub downdate: Duration,
    pub newton: Duration,
    pub rebuild: Duration,
    pub noise: Duration,
}

impl PhaseTimings {
    pub fn total(&self) -> Duration {
        self.downdate + self.newton + self.rebuild + self.noise
    }
}

/// Algorithm 1 up to, but excluding, the Gaussian mechanism.
#[derive(Debug, Clone)]
pub struct PreNoiseUpdate {
    pub stats: CooccurrenceStats,
    pub anchors: AnchorSet,
    /// C̄.
    pub coefficients: DMatrix<f64>,
    /// Ā.
    pub topics: DMatrix<f64>,
    /// R̄ = Ā†·Q^F·Ā†ᵀ, before any projection.
    pub topic_covariance: DMatrix<f64>,
    pub timings: PhaseTimings,
}

#[derive(Debug, Clone)]
pub struct BaseUnlearnOutput {
    /// (Ã, R̃) with C̄.
    pub released: TopicModel,
    pub pre_noise: PreNoiseUpdate,
    /// Ā + ν_A before the column-wise simplex projection.
    pub noisy_topics: DMatrix<f64>,
    pub noisy_covariance: DMatrix<f64>,
    pub noise_a: NoiseSpec,
    pub noise_r: NoiseSpec,
    pub forgotten: usize,
    pub capacity: usize,
    pub anchor_bound: usize,
    pub timings: PhaseTimings,
}

/// The downdate and Newton refresh, without capacity checks or noise.
pub fn unlearn_pre_noise(
    trained: &TrainedModel,
    forget: &[Vec<usize>],
    rank_tol: f64,
) -> Result<PreNoiseUpdate> {
    let mut timings = PhaseTimings::default();

    let t = Instant::now();
    let stats = remove_documents(&trained.stats, forget)?;
    timings.downdate = t.elapsed();

    let t = Instant::now();
    let anchors = trained.anchors.clone();
    if let Some(&w) = anchors.indices.iter().find(|w| stats.empty_words.contains(w)) {
        return Err(Error::RankDeficient(format!(
            "anchor word {w} no longer occurs after deletion"
        )));
    }
    let solver = SimplexLsq::new(anchor_rows(&stats.qbar, &anchors.indices))?;
    let n = stats.vocab_size();
    let r = anchors.len();
    let c_prev = &trained.model.coefficients;
    let rows: Vec<(usize, Result<DVector<f64>>)> = stats
        .active_words()
        .into_par_iter()
        .map(|i| {
            if let Some(k) = anchors.indices.iter().position(|&w| w == i) {
                let mut e = DVector::zeros(r);
                e[k] = 1.0;
                return (i, Ok(e));
            }
            let qi = stats.qbar.row(i).transpose();
            let prev = c_prev.row(i).transpose();
            (i, newton_update_c(&prev, &qi, &solver))
        })
        .collect();
    let mut coefficients = DMatrix::zeros(n, r);
    for (i, row) in rows {
        coefficients.set_row(i, &row?.transpose());
    }
    timings.newton = t.elapsed();

    let t = Instant::now();
    let (topics, topic_covariance) = assemble_topics(&stats.q, &stats.p, &coefficients, rank_tol)?;
    timings.rebuild = t.elapsed();

    Ok(PreNoiseUpdate {
        stats,
        anchors,
        coefficients,
        topics,
        topic_covariance,
        timings,
    })
}

/// Refuses deletions beyond min(capacity, anchor-stability bound).
pub fn check_capacity(requested: usize, capacity: usize, anchor_bound: usize) -> Result<()> {
    if requested > capacity.min(anchor_bound) {
        return Err(Error::CapacityExceeded {
            requested,
            capacity,
            anchor_bound,
        });
    }
    Ok(())
}

/// Algorithm 1 end to end. `seed` drives the Gaussian mechanism.
pub fn unlearn_base(
    trained: &TrainedModel,
    forget: &[Vec<usize>],
    cfg: &UnlearnConfig,
    seed: u64,
) -> Result<BaseUnlearnOutput> {
    cfg.validate()?;
    let m = trained.stats.num_docs;
    let n = trained.stats.vocab_size();
    let r = trained.anchors.len();
    let m_u = forget.len();
    let capacity = deletion_capacity_base(cfg, m, n, r);
    let anchor_bound = anchor_stability_bound(cfg, m, r);
    check_capacity(m_u, capacity, anchor_bound)?;

    let pre = unlearn_pre_noise(trained, forget, cfg.rank_tol)?;

    let t = Instant::now();
    let noise_a = NoiseSpec::new(sensitivity_a(cfg, m, m_u, n, r)?, cfg, seed)?;
    let noise_r = NoiseSpec::new(sensitivity_r(cfg, m, m_u, n, r)?, cfg, seed)?;
    let noisy_topics = &pre.topics + gaussian_noise(n, r, noise_a.sigma, seed, STREAM_A);
    let noisy_covariance =
        &pre.topic_covariance + gaussian_noise(r, r, noise_r.sigma, seed, STREAM_R);
    let released = TopicModel {
        topics: simplex_project_columns(&noisy_topics),
        topic_covariance: psd_project(&noisy_covariance)?,
        coefficients: pre.coefficients.clone(),
        eps0: cfg.eps0,
    };
    let mut timings = pre.timings.clone();
    timings.noise = t.elapsed();

    Ok(BaseUnlearnOutput {
        released,
        pre_noise: pre,
        noisy_topics,
        noisy_covariance,
        noise_a,
        noise_r,
        forgotten: m_u,
        capacity,
        anchor_bound,
        timings,
    })
}
