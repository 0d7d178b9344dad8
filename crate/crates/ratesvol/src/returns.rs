//! Zero-coupon bond returns from the component representation of the
//! yield curve: exact log returns, their first-order approximation, the
//! returns law of large numbers, term premia, and the maturity-slope
//! regression.
//!
//! Maturity-unit convention: rates are annual, so every price exponent
//! uses tau = l/12 years for a maturity of l months, and the scaled
//! loadings are Gamma_{il} = (l/12) * gamma_{il}. Rates enter pricing in
//! decimals; the panel (and therefore scores and loading curves) carries
//! percent, so returns divide by 100 exactly once, at the end.

use crate::estimate::ArSvModel;
use crate::linalg::{self, Mat};
use crate::simulate::{
    simulate_discrete, stationary_mean_continuous, stationary_mean_discrete, LlnConfig, LlnReport,
    SimMode,
};
use crate::yieldpca::LoadingCurve;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReturnsError {
    #[error("invalid rate {0}: need rate > -1 and finite")]
    InvalidRate(f64),
    #[error("maturity {l} months outside 1..={max}")]
    MaturityOutOfRange { l: usize, max: usize },
    #[error("misaligned series: {left} vs {right} observations")]
    MisalignedSeries { left: usize, right: usize },
    #[error("degenerate benchmark series (zero sum of squares)")]
    DegenerateSeries,
    #[error(transparent)]
    Sim(#[from] crate::simulate::SimError),
}

/// Price of a zero-coupon bond: (1 + rate)^(-tau), rate in decimal per
/// annum, tau in years.
pub fn price_zero(rate: f64, tau: f64) -> Result<f64, ReturnsError> {
    if !(rate > -1.0) || !rate.is_finite() {
        return Err(ReturnsError::InvalidRate(rate));
    }
    assert!(tau >= 0.0, "negative maturity");
    Ok((1.0 + rate).powf(-tau))
}

/// Maturity-scaled loading curves Gamma_{il} = (l/12) gamma_{il} with
/// their month-over-month differences, plus the same construction for
/// the mean-rate carry.
#[derive(Debug, Clone, Serialize)]
pub struct GammaMatrix {
    /// Per component: Gamma at months 0..=max_month (Gamma_{i,0} = 0).
    pub gamma_scaled: Vec<Vec<f64>>,
    /// Per component: Gamma_{il} - Gamma_{i,l-1} at months 1..=max_month
    /// (index l-1).
    pub differences: Vec<Vec<f64>>,
    /// Mean-curve carry: (l/12) * mu_l.
    pub mean_gamma: Vec<f64>,
    pub mean_differences: Vec<f64>,
    pub max_month: usize,
}

impl GammaMatrix {
    pub fn n_components(&self) -> usize {
        self.gamma_scaled.len()
    }

    fn check_maturity(&self, l: usize) -> Result<(), ReturnsError> {
        if l < 1 || l > self.max_month {
            return Err(ReturnsError::MaturityOutOfRange { l, max: self.max_month });
        }
        Ok(())
    }
}

/// Builds the Gamma matrix from interpolated loading curves.
pub fn gamma_matrix(curve: &LoadingCurve) -> GammaMatrix {
    let scale = |samples: &[f64]| -> Vec<f64> {
        samples.iter().enumerate().map(|(l, &g)| (l as f64 / 12.0) * g).collect()
    };
    let diffs = |g: &[f64]| -> Vec<f64> { g.windows(2).map(|w| w[1] - w[0]).collect() };

    let gamma_scaled: Vec<Vec<f64>> = curve.gamma.iter().map(|g| scale(g)).collect();
    let differences = gamma_scaled.iter().map(|g| diffs(g)).collect();
    let mean_gamma = scale(&curve.mean_curve);
    let mean_differences = diffs(&mean_gamma);
    GammaMatrix { gamma_scaled, differences, mean_gamma, mean_differences, max_month: curve.max_month }
}

/// Exact total log returns of the maturity-l (months) zero-coupon bond:
/// buy the l-month bond at t-1, sell it as an (l-1)-month bond at t.
/// Rates come from the component reconstruction, percent, and convert to
/// decimals inside. Output: one value per t = 1..T-1, natural log units.
pub fn exact_returns(
    curve: &LoadingCurve,
    scores: &Mat,
    l: usize,
) -> Result<Vec<f64>, ReturnsError> {
    if l < 1 || l > curve.max_month {
        return Err(ReturnsError::MaturityOutOfRange { l, max: curve.max_month });
    }
    let t_len = scores.rows();
    let tau = l as f64 / 12.0;
    let mut out = Vec::with_capacity(t_len - 1);
    for t in 1..t_len {
        let p_prev: Vec<f64> = (0..scores.cols()).map(|j| scores[(t - 1, j)]).collect();
        let p_now: Vec<f64> = (0..scores.cols()).map(|j| scores[(t, j)]).collect();
        let rho_prev = curve.rate_at(l, &p_prev) / 100.0;
        let rho_now = curve.rate_at(l - 1, &p_now) / 100.0;
        if !(rho_prev > -1.0) || !(rho_now > -1.0) {
            return Err(ReturnsError::InvalidRate(rho_prev.min(rho_now)));
        }
        out.push(-(tau - 1.0 / 12.0) * (1.0 + rho_now).ln() + tau * (1.0 + rho_prev).ln());
    }
    Ok(out)
}

/// First-order approximation of the same returns, linear in the scores:
/// Q*_l(t) = sum_i [Gamma_{il} P_i(t-1) - Gamma_{i,l-1} P_i(t)] plus the
/// deterministic mean-rate carry, all divided by 100 (percent to
/// decimal).
pub fn approx_returns(
    scores: &Mat,
    gamma: &GammaMatrix,
    l: usize,
) -> Result<Vec<f64>, ReturnsError> {
    gamma.check_maturity(l)?;
    let t_len = scores.rows();
    let d = gamma.n_components().min(scores.cols());
    let carry = gamma.mean_gamma[l] - gamma.mean_gamma[l - 1];
    let mut out = Vec::with_capacity(t_len - 1);
    for t in 1..t_len {
        let mut q = carry;
        for i in 0..d {
            q += gamma.gamma_scaled[i][l] * scores[(t - 1, i)]
                - gamma.gamma_scaled[i][l - 1] * scores[(t, i)];
        }
        out.push(q / 100.0);
    }
    Ok(out)
}

/// Exact and approximated return series for one maturity.
#[derive(Debug, Clone)]
pub struct ReturnSeries {
    pub maturity_months: usize,
    pub exact: Vec<f64>,
    pub approx: Vec<f64>,
}

pub fn return_series(
    curve: &LoadingCurve,
    gamma: &GammaMatrix,
    scores: &Mat,
    l: usize,
) -> Result<ReturnSeries, ReturnsError> {
    Ok(ReturnSeries {
        maturity_months: l,
        exact: exact_returns(curve, scores, l)?,
        approx: approx_returns(scores, gamma, l)?,
    })
}

/// Closed-form limit of the time-averaged approximate returns:
/// sum_i (Gamma_{il} - Gamma_{i,l-1}) E[P_i(inf)] plus carry, decimal.
pub fn returns_oracle(
    gamma: &GammaMatrix,
    stationary_mean: &[f64],
    l: usize,
) -> Result<f64, ReturnsError> {
    gamma.check_maturity(l)?;
    let mut q = gamma.mean_gamma[l] - gamma.mean_gamma[l - 1];
    for (i, &m) in stationary_mean.iter().enumerate().take(gamma.n_components()) {
        q += gamma.differences[i][l - 1] * m;
    }
    Ok(q / 100.0)
}

/// Report for the returns law of large numbers.
#[derive(Debug, Clone, Serialize)]
pub struct ReturnsLlnReport {
    pub maturity_months: usize,
    pub oracle: f64,
    pub estimate: f64,
    pub abs_error: f64,
    pub mc_stderr: f64,
    pub passed: bool,
    /// The factor-mean verification backing this run.
    pub factor_report: LlnReport,
}

/// Simulates the model and checks that time-averaged approximate returns
/// converge to the stationary oracle. In continuous mode the per-month
/// derivative of Gamma replaces the month differences (identical numbers
/// for the sampled curves, see `GammaMatrix::differences`).
pub fn returns_lln(
    model: &ArSvModel,
    gamma: &GammaMatrix,
    l: usize,
    cfg: &LlnConfig,
) -> Result<ReturnsLlnReport, ReturnsError> {
    gamma.check_maturity(l)?;
    let factor_report = crate::simulate::verify_lln(model, cfg)?;
    let stationary = match cfg.mode {
        SimMode::Discrete => stationary_mean_discrete(model)?,
        SimMode::Continuous => stationary_mean_continuous(model)?,
    };
    let oracle = returns_oracle(gamma, &stationary, l)?;

    // the average of Q* is an affine map of the average of the factors:
    // sum_i Gamma-diff_i * mean_i + carry + edge terms of order 1/T
    let d = gamma.n_components().min(model.dim());
    let carry = (gamma.mean_gamma[l] - gamma.mean_gamma[l - 1]) / 100.0;
    let estimate = carry
        + (0..d)
            .map(|i| gamma.differences[i][l - 1] * factor_report.estimate[i] / 100.0)
            .sum::<f64>();
    let mc_stderr = (0..d)
        .map(|i| (gamma.differences[i][l - 1] * factor_report.mc_stderr[i] / 100.0).powi(2))
        .sum::<f64>()
        .sqrt();
    let abs_error = (estimate - oracle).abs();
    let passed = abs_error < 4.0 * mc_stderr + cfg.atol;
    Ok(ReturnsLlnReport { maturity_months: l, oracle, estimate, abs_error, mc_stderr, passed, factor_report })
}

/// Per-step continuous-time log-return increments of the maturity-l
/// wealth process along a simulated path: Gamma'(l) P dt + Gamma(l) dP,
/// decimal units. `l = 0` gives the short-rate benchmark.
pub fn ct_log_return_increments(
    gamma: &GammaMatrix,
    path: &crate::simulate::SimPath,
    l: usize,
    h: f64,
) -> Result<Vec<f64>, ReturnsError> {
    if l > gamma.max_month {
        return Err(ReturnsError::MaturityOutOfRange { l, max: gamma.max_month });
    }
    let d = gamma.n_components().min(path.x.cols());
    // Gamma'(l): per-month left difference; at l = 0 use the first one
    let dgamma = |i: usize| -> f64 {
        if l == 0 {
            gamma.differences[i][0]
        } else {
            gamma.differences[i][l - 1]
        }
    };
    let dmean = if l == 0 { gamma.mean_differences[0] } else { gamma.mean_differences[l - 1] };
    let mut out = Vec::with_capacity(path.len() - 1);
    for t in 1..path.len() {
        let mut q = dmean * h;
        for i in 0..d {
            let p_prev = path.x[(t - 1, i)];
            let dp = path.x[(t, i)] - p_prev;
            q += dgamma(i) * p_prev * h + gamma.gamma_scaled[i].get(l).copied().unwrap_or(0.0) * dp;
        }
        out.push(q / 100.0);
    }
    Ok(out)
}

/// Term premium: elementwise spread of two aligned log-return series.
pub fn term_premium(returns_l: &[f64], returns_short: &[f64]) -> Result<Vec<f64>, ReturnsError> {
    if returns_l.len() != returns_short.len() {
        return Err(ReturnsError::MisalignedSeries {
            left: returns_l.len(),
            right: returns_short.len(),
        });
    }
    Ok(returns_l.iter().zip(returns_short).map(|(a, b)| a - b).collect())
}

/// No-intercept regression slope of one term-premium series on a
/// benchmark, with its standard error.
#[derive(Debug, Clone, Serialize)]
pub struct CapmReport {
    pub slope: f64,
    pub stderr: f64,
    pub l: usize,
    pub l0: usize,
    /// The one-factor prediction l / l0.
    pub theoretical_slope: f64,
}

pub fn capm_slope(
    tp_l: &[f64],
    tp_benchmark: &[f64],
    l: usize,
    l0: usize,
) -> Result<CapmReport, ReturnsError> {
    if tp_l.len() != tp_benchmark.len() {
        return Err(ReturnsError::MisalignedSeries { left: tp_l.len(), right: tp_benchmark.len() });
    }
    let sxx: f64 = tp_benchmark.iter().map(|x| x * x).sum();
    if sxx <= 0.0 || tp_l.len() < 2 {
        return Err(ReturnsError::DegenerateSeries);
    }
    let sxy: f64 = tp_l.iter().zip(tp_benchmark).map(|(y, x)| x * y).sum();
    let slope = sxy / sxx;
    let rss: f64 = tp_l
        .iter()
        .zip(tp_benchmark)
        .map(|(y, x)| {
            let e = y - slope * x;
            e * e
        })
        .sum();
    let s2 = rss / (tp_l.len() - 1) as f64;
    Ok(CapmReport {
        slope,
        stderr: (s2 / sxx).sqrt(),
        l,
        l0,
        theoretical_slope: l as f64 / l0 as f64,
    })
}

/// Historical (non-simulated) term premium of maturity l over the
/// 1-month benchmark, from approximate returns.
pub fn historical_term_premium(
    scores: &Mat,
    gamma: &GammaMatrix,
    l: usize,
    short_l: usize,
) -> Result<Vec<f64>, ReturnsError> {
    let rl = approx_returns(scores, gamma, l)?;
    let rs = approx_returns(scores, gamma, short_l)?;
    term_premium(&rl, &rs)
}

/// Simulated discrete-mode return series for CAPM-style experiments.
pub fn simulated_approx_returns(
    model: &ArSvModel,
    gamma: &GammaMatrix,
    l: usize,
    steps: usize,
    seed: u64,
) -> Result<Vec<f64>, ReturnsError> {
    gamma.check_maturity(l)?;
    let path = simulate_discrete(model, steps, seed, None)?;
    Ok(approx_returns(&path.x, gamma, l)?)
}
