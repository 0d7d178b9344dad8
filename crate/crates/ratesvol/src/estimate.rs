//! Ordinary-least-squares estimation of the volatility autoregression,
//! per-component scalar ARs, and the multivariate model with selectable
//! volatility-scaled components.
//!
//! Everything is plain OLS. Rows whose innovations carry a V(t) factor
//! are estimated by dividing their equation through by V(t) and running
//! OLS on the transformed regressors, which recovers the same
//! coefficients as weighted least squares would.

use crate::ingest::VolSeries;
use crate::linalg::{self, Mat};
use crate::special::student_t_two_sided_p;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("too few observations: {n} rows for {k} coefficients")]
    TooFewObservations { n: usize, k: usize },
    #[error("design matrix rank deficient: rank {rank} < {cols}")]
    RankDeficientDesign { rank: usize, cols: usize },
    #[error("misaligned series: scores have {scores} rows, volatility has {vol}")]
    MisalignedSeries { scores: usize, vol: usize },
    #[error("eigenvalue iteration did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

/// Minimum window for the time-series fits.
pub const MIN_FIT_MONTHS: usize = 24;

/// A fitted least-squares regression.
#[derive(Debug, Clone, Serialize)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    /// Two-sided p-values from the Student t distribution with `dof`.
    pub p_values: Vec<f64>,
    #[serde(skip)]
    pub residuals: Vec<f64>,
    pub r_squared: f64,
    pub dof: usize,
}

impl OlsFit {
    /// Residual standard deviation with the n-k correction.
    pub fn residual_std(&self) -> f64 {
        let rss: f64 = self.residuals.iter().map(|e| e * e).sum();
        (rss / self.dof as f64).sqrt()
    }
}

/// OLS of `y` on the columns of `x`, solved by QR with column pivoting.
pub fn ols(x: &Mat, y: &[f64]) -> Result<OlsFit, EstimateError> {
    let n = x.rows();
    let k = x.cols();
    if n <= k {
        return Err(EstimateError::TooFewObservations { n, k });
    }
    let sol = match linalg::lstsq(x, y, 1e-10) {
        Ok(s) => s,
        Err(linalg::LinalgError::RankDeficient { rank, cols }) => {
            return Err(EstimateError::RankDeficientDesign { rank, cols })
        }
        Err(e) => return Err(e.into()),
    };

    let fitted = x.matvec(&sol.coefficients);
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let dof = n - k;
    let s2 = rss / dof as f64;

    let standard_errors: Vec<f64> =
        sol.xtx_inv_diag.iter().map(|&d| (s2 * d).max(0.0).sqrt()).collect();
    let t_stats: Vec<f64> = sol
        .coefficients
        .iter()
        .zip(&standard_errors)
        .map(|(&c, &se)| if se > 0.0 { c / se } else if c == 0.0 { 0.0 } else { f64::INFINITY.copysign(c) })
        .collect();
    let p_values: Vec<f64> = t_stats.iter().map(|&t| student_t_two_sided_p(t, dof)).collect();

    let ybar = linalg::mean(y);
    let tss: f64 = y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else if rss <= 1e-24 { 1.0 } else { 0.0 };

    Ok(OlsFit { coefficients: sol.coefficients, standard_errors, t_stats, p_values, residuals, r_squared, dof })
}

/// AR(1) fit of the log volatility: ln V(t) on [1, ln V(t-1)].
#[derive(Debug, Clone)]
pub struct LogArFit {
    pub alpha: f64,
    pub beta: f64,
    /// Residual standard deviation, n-k corrected.
    pub sigma0: f64,
    pub fit: OlsFit,
}

pub fn fit_log_ar(vol: &VolSeries) -> Result<LogArFit, EstimateError> {
    let lv = vol.log_values();
    if lv.len() < MIN_FIT_MONTHS {
        return Err(EstimateError::TooFewObservations { n: lv.len(), k: 2 });
    }
    let n = lv.len() - 1;
    let x = Mat::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { lv[i] });
    let y = &lv[1..];
    let fit = ols(&x, y)?;
    Ok(LogArFit { alpha: fit.coefficients[0], beta: fit.coefficients[1], sigma0: fit.residual_std(), fit })
}

/// AR(1) fit of one score series: P(t) on [1, P(t-1)].
#[derive(Debug, Clone)]
pub struct ScalarArFit {
    pub a: f64,
    pub b: f64,
    pub fit: OlsFit,
}

pub fn fit_scalar_ar(score: &[f64]) -> Result<ScalarArFit, EstimateError> {
    if score.len() < MIN_FIT_MONTHS {
        return Err(EstimateError::TooFewObservations { n: score.len(), k: 2 });
    }
    let n = score.len() - 1;
    let x = Mat::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { score[i] });
    let fit = ols(&x, &score[1..])?;
    Ok(ScalarArFit { a: fit.coefficients[0], b: fit.coefficients[1], fit })
}

/// Parameters of the autoregressive stochastic-volatility system.
///
/// Components listed in `vix_scaled` (1-based) carry V(t)-multiplied
/// innovations; their `noise_scales` entry is the standard deviation of
/// the normalized innovation Z_i = (residual / V).
#[derive(Debug, Clone)]
pub struct ArSvModel {
    pub alpha: f64,
    pub beta: f64,
    pub sigma0: f64,
    pub a: Vec<f64>,
    pub b: Mat,
    pub c: Vec<f64>,
    pub vix_scaled: BTreeSet<usize>,
    pub noise_scales: Vec<f64>,
    /// Covariance of (Z_0, Z_1, .., Z_d), diagonal pinned to
    /// [sigma0^2, noise_scales^2] with empirical correlations.
    pub resid_cov: Mat,
    /// Per-row regression fits (coefficient order: a_i, B_i1..B_id, c_i).
    pub row_fits: Vec<OlsFit>,
    pub diagonal_b: bool,
}

impl ArSvModel {
    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn is_vix_scaled(&self, component_1based: usize) -> bool {
        self.vix_scaled.contains(&component_1based)
    }
}

/// Versioned JSON document for the model: the contract between the
/// estimation, simulation, and returns stages.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArSvDocument {
    pub model_version: u32,
    pub d: usize,
    pub alpha: f64,
    pub beta: f64,
    pub sigma0: f64,
    pub a: Vec<f64>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    pub vix_scaled: Vec<usize>,
    pub noise_scales: Vec<f64>,
    pub residual_covariance: Vec<Vec<f64>>,
    pub diagonal_b: bool,
}

impl From<&ArSvModel> for ArSvDocument {
    fn from(m: &ArSvModel) -> Self {
        Self {
            model_version: 1,
            d: m.dim(),
            alpha: m.alpha,
            beta: m.beta,
            sigma0: m.sigma0,
            a: m.a.clone(),
            b: m.b.to_nested(),
            c: m.c.clone(),
            vix_scaled: m.vix_scaled.iter().copied().collect(),
            noise_scales: m.noise_scales.clone(),
            residual_covariance: m.resid_cov.to_nested(),
            diagonal_b: m.diagonal_b,
        }
    }
}

impl ArSvDocument {
    pub fn into_model(self) -> ArSvModel {
        ArSvModel {
            alpha: self.alpha,
            beta: self.beta,
            sigma0: self.sigma0,
            a: self.a,
            b: Mat::from_rows(&self.b),
            c: self.c,
            vix_scaled: self.vix_scaled.into_iter().collect(),
            noise_scales: self.noise_scales,
            resid_cov: Mat::from_rows(&self.residual_covariance),
            row_fits: Vec::new(),
            diagonal_b: self.diagonal_b,
        }
    }
}

/// Fits the d-dimensional system on aligned scores and volatility.
///
/// Rows outside `vix_scaled` regress P_i(t) on [1, P(t-1).., V(t)]
/// (or [1, P_i(t-1), V(t)] with `diagonal_b`). Rows inside `vix_scaled`
/// divide the equation by V(t) first, regressing P_i(t)/V(t) on
/// [1/V(t), P(t-1)/V(t).., 1]; the coefficient order (a_i, B_i., c_i)
/// is identical either way.
pub fn fit_arsv(
    scores: &Mat,
    vol: &VolSeries,
    vix_scaled: &BTreeSet<usize>,
    diagonal_b: bool,
) -> Result<ArSvModel, EstimateError> {
    let t_len = scores.rows();
    let d = scores.cols();
    if t_len != vol.len() {
        return Err(EstimateError::MisalignedSeries { scores: t_len, vol: vol.len() });
    }
    if t_len < MIN_FIT_MONTHS {
        return Err(EstimateError::TooFewObservations { n: t_len, k: d + 2 });
    }
    debug_assert!(vix_scaled.iter().all(|&i| (1..=d).contains(&i)), "vix_scaled outside 1..=d");

    let log_ar = fit_log_ar(vol)?;
    let n = t_len - 1;
    let v = &vol.values;

    let mut a = vec![0.0; d];
    let mut b = Mat::zeros(d, d);
    let mut c = vec![0.0; d];
    let mut noise_scales = vec![0.0; d];
    let mut row_fits = Vec::with_capacity(d);
    let mut z_rows: Vec<Vec<f64>> = Vec::with_capacity(d);

    for i in 0..d {
        let scaled = vix_scaled.contains(&(i + 1));
        let lag_cols: Vec<usize> = if diagonal_b { vec![i] } else { (0..d).collect() };
        let k = lag_cols.len() + 2;

        let x = Mat::from_fn(n, k, |row, col| {
            let t = row + 1;
            let w = if scaled { 1.0 / v[t] } else { 1.0 };
            if col == 0 {
                w
            } else if col <= lag_cols.len() {
                scores[(t - 1, lag_cols[col - 1])] * w
            } else {
                // V(t) column; after division it becomes the constant 1
                if scaled { 1.0 } else { v[t] }
            }
        });
        let y: Vec<f64> = (0..n)
            .map(|row| {
                let t = row + 1;
                if scaled { scores[(t, i)] / v[t] } else { scores[(t, i)] }
            })
            .collect();

        let fit = ols(&x, &y)?;
        a[i] = fit.coefficients[0];
        for (pos, &j) in lag_cols.iter().enumerate() {
            b[(i, j)] = fit.coefficients[1 + pos];
        }
        c[i] = fit.coefficients[k - 1];
        noise_scales[i] = fit.residual_std();
        z_rows.push(fit.residuals.clone());
        row_fits.push(fit);
    }

    // innovation covariance of (W, Z_1..Z_d): empirical correlations with
    // the diagonal pinned to the dof-corrected variances
    let w = &log_ar.fit.residuals;
    let mut series: Vec<&[f64]> = vec![w];
    for z in &z_rows {
        series.push(z);
    }
    let stds: Vec<f64> = std::iter::once(log_ar.sigma0).chain(noise_scales.iter().copied()).collect();
    let mut resid_cov = Mat::zeros(d + 1, d + 1);
    for p in 0..=d {
        for q in p..=d {
            let mp = linalg::mean(series[p]);
            let mq = linalg::mean(series[q]);
            let cov: f64 = series[p]
                .iter()
                .zip(series[q])
                .map(|(&x, &y)| (x - mp) * (y - mq))
                .sum::<f64>()
                / (n - 1) as f64;
            let sp = linalg::variance(series[p], 1).sqrt();
            let sq = linalg::variance(series[q], 1).sqrt();
            let corr = if sp > 0.0 && sq > 0.0 { (cov / (sp * sq)).clamp(-1.0, 1.0) } else { 0.0 };
            let val = if p == q { stds[p] * stds[p] } else { corr * stds[p] * stds[q] };
            resid_cov[(p, q)] = val;
            resid_cov[(q, p)] = val;
        }
    }

    Ok(ArSvModel {
        alpha: log_ar.alpha,
        beta: log_ar.beta,
        sigma0: log_ar.sigma0,
        a,
        b,
        c,
        vix_scaled: vix_scaled.clone(),
        noise_scales,
        resid_cov,
        row_fits,
        diagonal_b,
    })
}

/// Largest eigenvalue modulus of B (Hessenberg + shifted QR).
pub fn spectral_radius(b: &Mat) -> Result<f64, EstimateError> {
    match linalg::spectral_radius(b) {
        Ok(r) => Ok(r),
        Err(linalg::LinalgError::NoConvergence(n)) => Err(EstimateError::NoConvergence(n)),
        Err(e) => Err(e.into()),
    }
}

/// Stability report for a fitted model.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub spectral_radius_b: f64,
    /// Eigenvalues of B as (re, im) pairs, descending modulus.
    pub eigenvalues_b: Vec<(f64, f64)>,
    pub beta_in_unit: bool,
    pub stationary_ok: bool,
}

/// Checks the long-run stability conditions: spectral radius of B below
/// one and beta inside (0, 1).
pub fn check_stability(model: &ArSvModel) -> Result<StabilityReport, EstimateError> {
    let eigs = match linalg::eigenvalues(&model.b) {
        Ok(e) => e,
        Err(linalg::LinalgError::NoConvergence(n)) => return Err(EstimateError::NoConvergence(n)),
        Err(e) => return Err(e.into()),
    };
    let spectral_radius_b = eigs.first().map(|e| e.abs()).unwrap_or(0.0);
    let beta_in_unit = model.beta > 0.0 && model.beta < 1.0;
    Ok(StabilityReport {
        spectral_radius_b,
        eigenvalues_b: eigs.iter().map(|e| (e.re, e.im)).collect(),
        beta_in_unit,
        stationary_ok: spectral_radius_b < 1.0 && beta_in_unit,
    })
}
