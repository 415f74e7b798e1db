use nalgebra::DMatrix;
use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};
use crate::recovery::{align_columns, Alignment};

/// Max absolute entry difference after reordering the columns of `a`.
pub fn entrywise_error(a: &DMatrix<f64>, a_ref: &DMatrix<f64>, alignment: &Alignment) -> Result<f64> {
    if a.shape() != a_ref.shape() || alignment.perm.len() != a.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "{:?} vs {:?} under a {}-column alignment",
            a.shape(),
            a_ref.shape(),
            alignment.perm.len()
        )));
    }
    Ok((alignment.apply_columns(a) - a_ref).amax())
}

/// [`entrywise_error`] under the standard anchor-then-ℓ1 alignment.
pub fn aligned_error(
    a: &DMatrix<f64>,
    a_ref: &DMatrix<f64>,
    anchors: Option<&[usize]>,
    ref_anchors: Option<&[usize]>,
) -> Result<f64> {
    let al = align_columns(a, a_ref, anchors, ref_anchors)?;
    entrywise_error(a, a_ref, &al)
}

/// SHA-256 over the shape and little-endian entries, hex encoded.
pub fn matrix_digest(m: &DMatrix<f64>) -> String {
    let mut h = Sha256::new();
    h.update((m.nrows() as u64).to_le_bytes());
    h.update((m.ncols() as u64).to_le_bytes());
    for v in m.iter() {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub critical_value: f64,
    pub reject: bool,
}

/// Asymptotic Kolmogorov survival function P(K > x).
fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * x * x).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test against N(0, sigma²).
pub fn ks_test_normal(samples: &[f64], sigma: f64, alpha: f64) -> Result<KsResult> {
    let dist = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = dist.cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let scaled = d * n.sqrt();
    let p_value = kolmogorov_sf(scaled);
    // Bisection for the asymptotic critical value at level alpha.
    let (mut lo, mut hi) = (0.0, 5.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_sf(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let critical_value = hi / n.sqrt();
    Ok(KsResult {
        statistic: d,
        p_value,
        critical_value,
        reject: d > critical_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub t_statistic: f64,
    /// Two-sided p-value of slope = 0.
    pub p_value: f64,
}

/// Ordinary least squares y ≈ a + b·x with a t-test on b.
pub fn ols_slope(x: &[f64], y: &[f64]) -> Result<Regression> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::InvalidSize("regression needs at least 3 paired points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidSize("regressor is constant".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let dof = n - 2.0;
    let slope_stderr = (sse / dof / sxx).sqrt();
    let t_statistic = if slope_stderr > 0.0 {
        slope / slope_stderr
    } else if slope == 0.0 {
        0.0
    } else {
        f64::INFINITY * slope.signum()
    };
    let t = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::Numerical(e.to_string()))?;
    let p_value = if t_statistic.is_finite() {
        2.0 * (1.0 - t.cdf(t_statistic.abs()))
    } else {
        0.0
    };
    Ok(Regression {
        slope,
        intercept,
        slope_stderr,
        t_statistic,
        p_value,
    })
}
