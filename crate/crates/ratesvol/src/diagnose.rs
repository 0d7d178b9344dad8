//! Residual diagnostics: moments, autocorrelation, portmanteau and
//! unit-root tests, QQ data.
//!
//! Moment conventions follow the empirical-moment definition with 1/N
//! normalization; kurtosis is raw (Gaussian = 3), not excess. The ADF
//! regression uses a constant and no trend, lag length by AIC, with
//! p-values from a MacKinnon-style response-surface approximation for
//! the constant-only case (coefficients inlined below).

use crate::linalg::{mean, Mat};
use crate::special::{chi_square_sf, inv_normal_cdf, normal_cdf};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnoseError {
    #[error("degenerate series: zero variance over {0} observations")]
    DegenerateSeries(usize),
    #[error("series too short: {len} observations (need >= {need})")]
    TooShort { len: usize, need: usize },
    #[error("misaligned series: {left} vs {right} observations")]
    MisalignedSeries { left: usize, right: usize },
    #[error(transparent)]
    Estimate(#[from] crate::estimate::EstimateError),
}

/// First four moments of a series (1/N central moments; kurtosis raw).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentSummary {
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

/// Outcome of a scalar hypothesis test.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub lags_or_dof: usize,
    /// Reject the null at the 5% level.
    pub decision_at_5pct: bool,
}

impl TestResult {
    fn from_p(statistic: f64, p_value: f64, lags_or_dof: usize) -> Self {
        Self { statistic, p_value, lags_or_dof, decision_at_5pct: p_value < 0.05 }
    }
}

/// Empirical skewness and kurtosis.
pub fn skew_kurt(series: &[f64]) -> Result<MomentSummary, DiagnoseError> {
    let n = series.len();
    if n < 4 {
        return Err(DiagnoseError::TooShort { len: n, need: 4 });
    }
    let m = mean(series);
    let nf = n as f64;
    let m2 = series.iter().map(|x| (x - m).powi(2)).sum::<f64>() / nf;
    if m2 <= 0.0 {
        return Err(DiagnoseError::DegenerateSeries(n));
    }
    let m3 = series.iter().map(|x| (x - m).powi(3)).sum::<f64>() / nf;
    let m4 = series.iter().map(|x| (x - m).powi(4)).sum::<f64>() / nf;
    let s = m2.sqrt();
    Ok(MomentSummary { mean: m, std: s, skewness: m3 / (s * s * s), kurtosis: m4 / (m2 * m2) })
}

/// Autocorrelation function with the white-noise confidence band.
#[derive(Debug, Clone, Serialize)]
pub struct AcfResult {
    /// rho_hat for lags 1..=max_lag.
    pub autocorrelations: Vec<f64>,
    /// +/- 1.96 / sqrt(T), the 95% band under white noise.
    pub band: f64,
}

pub fn acf(series: &[f64], max_lag: usize) -> Result<AcfResult, DiagnoseError> {
    let n = series.len();
    if n <= max_lag + 1 {
        return Err(DiagnoseError::TooShort { len: n, need: max_lag + 2 });
    }
    let m = mean(series);
    let denom: f64 = series.iter().map(|x| (x - m).powi(2)).sum();
    if denom <= 0.0 {
        return Err(DiagnoseError::DegenerateSeries(n));
    }
    let autocorrelations = (1..=max_lag)
        .map(|k| {
            series[k..]
                .iter()
                .zip(series)
                .map(|(&a, &b)| (a - m) * (b - m))
                .sum::<f64>()
                / denom
        })
        .collect();
    Ok(AcfResult { autocorrelations, band: 1.96 / (n as f64).sqrt() })
}

/// Ljung-Box portmanteau test: Q = T(T+2) sum rho_k^2 / (T-k), p-value
/// from chi-square with `lags` degrees of freedom.
pub fn ljung_box(series: &[f64], lags: usize) -> Result<TestResult, DiagnoseError> {
    let n = series.len();
    if n <= lags + 1 {
        return Err(DiagnoseError::TooShort { len: n, need: lags + 2 });
    }
    let rho = acf(series, lags)?.autocorrelations;
    let nf = n as f64;
    let q = nf
        * (nf + 2.0)
        * rho
            .iter()
            .enumerate()
            .map(|(i, &r)| r * r / (nf - (i + 1) as f64))
            .sum::<f64>();
    Ok(TestResult::from_p(q, chi_square_sf(q, lags), lags))
}

/// Lag selection for the augmented Dickey-Fuller regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdfLagPolicy {
    /// Minimize AIC over 0..=floor(12 (T/100)^{1/4}) lags.
    Aic,
    Fixed(usize),
}

/// Augmented Dickey-Fuller unit-root test, constant and no trend:
/// regress dy_t on [1, y_{t-1}, dy_{t-1}..dy_{t-p}]; the statistic is the
/// t-ratio on y_{t-1}.
pub fn adf_test(series: &[f64], policy: AdfLagPolicy) -> Result<TestResult, DiagnoseError> {
    let t_len = series.len();
    if t_len < 30 {
        return Err(DiagnoseError::TooShort { len: t_len, need: 30 });
    }
    let dy: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();

    let max_lag = match policy {
        AdfLagPolicy::Fixed(p) => p,
        AdfLagPolicy::Aic => {
            let schwert = (12.0 * (t_len as f64 / 100.0).powf(0.25)).floor() as usize;
            schwert.min((t_len - 10) / 2)
        }
    };

    let fit_at = |p: usize, start: usize| -> Option<(f64, f64, usize)> {
        // response dy[t] for t in start..dy.len(); regressors
        // [1, y[t], dy[t-1] .. dy[t-p]] where y indexing uses level lag
        let nobs = dy.len() - start;
        let k = 2 + p;
        if nobs <= k {
            return None;
        }
        let x = Mat::from_fn(nobs, k, |row, col| {
            let t = start + row;
            match col {
                0 => 1.0,
                1 => series[t],
                _ => dy[t - (col - 1)],
            }
        });
        let y: Vec<f64> = (start..dy.len()).map(|t| dy[t]).collect();
        let fit = crate::estimate::ols(&x, &y).ok()?;
        let rss: f64 = fit.residuals.iter().map(|e| e * e).sum();
        Some((fit.t_stats[1], rss, nobs))
    };

    let chosen = match policy {
        AdfLagPolicy::Fixed(p) => p,
        AdfLagPolicy::Aic => {
            // all candidates scored on the common max_lag-trimmed sample
            let mut best: Option<(f64, usize)> = None;
            for p in 0..=max_lag {
                if let Some((_, rss, nobs)) = fit_at(p, max_lag) {
                    let n = nobs as f64;
                    let aic = if rss > 0.0 { n * (rss / n).ln() } else { f64::NEG_INFINITY }
                        + 2.0 * (p + 2) as f64;
                    match best {
                        Some((b, _)) if aic >= b => {}
                        _ => best = Some((aic, p)),
                    }
                }
            }
            best.map(|(_, p)| p).unwrap_or(0)
        }
    };

    let (stat, _, _) = fit_at(chosen, chosen).ok_or(DiagnoseError::TooShort {
        len: t_len,
        need: chosen + 10,
    })?;
    Ok(TestResult::from_p(stat, mackinnon_p(stat), chosen))
}

// Response-surface coefficients for the constant-only Dickey-Fuller t
// distribution (MacKinnon 1994-style approximation, as used by the
// standard econometrics packages): p = Phi(poly(tau)).
const TAU_MAX: f64 = 2.74;
const TAU_MIN: f64 = -18.83;
const TAU_STAR: f64 = -1.61;
const TAU_SMALL_P: [f64; 3] = [2.1659, 1.4412, 3.8269e-2];
const TAU_LARGE_P: [f64; 4] = [1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2];

fn mackinnon_p(tau: f64) -> f64 {
    if tau.is_nan() {
        return f64::NAN;
    }
    if tau > TAU_MAX {
        return 1.0;
    }
    if tau < TAU_MIN {
        return 0.0;
    }
    let coeffs: &[f64] = if tau <= TAU_STAR { &TAU_SMALL_P } else { &TAU_LARGE_P };
    let z = coeffs.iter().rev().fold(0.0, |acc, &c| acc * tau + c);
    normal_cdf(z)
}

/// Quantile-quantile data against the standard normal: pairs of
/// (theoretical quantile at plotting position (i-1/2)/N, standardized
/// order statistic).
pub fn qq_data(series: &[f64]) -> Result<Vec<(f64, f64)>, DiagnoseError> {
    let n = series.len();
    if n < 10 {
        return Err(DiagnoseError::TooShort { len: n, need: 10 });
    }
    let m = mean(series);
    let s2 = series.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
    if s2 <= 0.0 {
        return Err(DiagnoseError::DegenerateSeries(n));
    }
    let s = s2.sqrt();
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let p = (i as f64 + 0.5) / n as f64;
            (inv_normal_cdf(p), (x - m) / s)
        })
        .collect())
}

/// One component's moment diagnostics: innovations raw and normalized
/// by the volatility level.
#[derive(Debug, Clone, Serialize)]
pub struct ComponentMoments {
    /// 1-based component index.
    pub component: usize,
    pub skew_z: f64,
    pub skew_z_over_v: f64,
    pub kurt_z: f64,
    pub kurt_z_over_v: f64,
}

/// The four-row moment table over all components.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsTable {
    pub components: Vec<ComponentMoments>,
}

impl DiagnosticsTable {
    /// Plain-text rendering, components as columns.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> =
            self.components.iter().map(|c| format!("P{}", c.component)).collect();
        out.push_str(&format!("{:<16}", "component"));
        for h in &header {
            out.push_str(&format!("{h:>10}"));
        }
        out.push('\n');
        let rows: [(&str, fn(&ComponentMoments) -> f64); 4] = [
            ("skew Z", |c| c.skew_z),
            ("skew Z/V", |c| c.skew_z_over_v),
            ("kurt Z", |c| c.kurt_z),
            ("kurt Z/V", |c| c.kurt_z_over_v),
        ];
        for (label, get) in rows {
            out.push_str(&format!("{label:<16}"));
            for c in &self.components {
                out.push_str(&format!("{:>10.3}", get(c)));
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the moment table from per-component innovation series and the
/// aligned volatility levels (same length as each residual series).
pub fn diagnostics_table(
    residuals: &[Vec<f64>],
    vol_aligned: &[f64],
) -> Result<DiagnosticsTable, DiagnoseError> {
    let mut components = Vec::with_capacity(residuals.len());
    for (i, z) in residuals.iter().enumerate() {
        if z.len() != vol_aligned.len() {
            return Err(DiagnoseError::MisalignedSeries { left: z.len(), right: vol_aligned.len() });
        }
        let normalized: Vec<f64> = z.iter().zip(vol_aligned).map(|(&e, &v)| e / v).collect();
        let raw = skew_kurt(z)?;
        let norm = skew_kurt(&normalized)?;
        components.push(ComponentMoments {
            component: i + 1,
            skew_z: raw.skewness,
            skew_z_over_v: norm.skewness,
            kurt_z: raw.kurtosis,
            kurt_z_over_v: norm.kurtosis,
        });
    }
    Ok(DiagnosticsTable { components })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{standard_normal, stream_rng};

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn alternating_series_moments() {
        let s: Vec<f64> = (0..50).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        let m = skew_kurt(&s).unwrap();
        assert_close(m.skewness, 0.0, 1e-12);
        assert_close(m.kurtosis, 1.0, 1e-12);
    }

    #[test]
    fn skew_kurt_affine_invariance() {
        let mut rng = stream_rng(1, 0);
        let s: Vec<f64> = (0..500).map(|_| standard_normal(&mut rng).powi(3)).collect();
        let base = skew_kurt(&s).unwrap();
        let mapped: Vec<f64> = s.iter().map(|x| 3.7 * x - 11.0).collect();
        let m = skew_kurt(&mapped).unwrap();
        assert_close(m.skewness, base.skewness, 1e-10);
        assert_close(m.kurtosis, base.kurtosis, 1e-10);
    }

    #[test]
    fn gaussian_sample_moments() {
        let mut rng = stream_rng(2, 0);
        let s: Vec<f64> = (0..1_000_000).map(|_| standard_normal(&mut rng)).collect();
        let m = skew_kurt(&s).unwrap();
        assert!(m.skewness.abs() < 0.01, "skew {}", m.skewness);
        assert!((m.kurtosis - 3.0).abs() < 0.03, "kurt {}", m.kurtosis);
    }

    #[test]
    fn skew_kurt_rejects_degenerate() {
        assert!(matches!(skew_kurt(&[2.0; 10]), Err(DiagnoseError::DegenerateSeries(_))));
        assert!(matches!(skew_kurt(&[1.0, 2.0]), Err(DiagnoseError::TooShort { .. })));
    }

    #[test]
    fn acf_alternating_is_minus_one_at_lag_one() {
        let n = 200;
        let s: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        let r = acf(&s, 1).unwrap();
        // up to the (T-1)/T edge factor
        assert_close(r.autocorrelations[0], -((n - 1) as f64) / n as f64, 1e-12);
    }

    #[test]
    fn acf_white_noise_inside_band() {
        let mut rng = stream_rng(3, 0);
        let n = 10_000;
        let s: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
        let r = acf(&s, 20).unwrap();
        let bound = 3.0 / (n as f64).sqrt();
        let inside = r.autocorrelations.iter().filter(|&&x| x.abs() < bound).count();
        assert!(inside * 100 >= 95 * 20, "only {inside}/20 inside 3-sigma");
    }

    #[test]
    fn acf_rejects_constant() {
        assert!(matches!(acf(&[1.0; 100], 5), Err(DiagnoseError::DegenerateSeries(_))));
    }

    #[test]
    fn ljung_box_zero_autocorrelation_gives_p_one() {
        // orthogonalize a noise series against its own lags so that
        // rho_1..rho_h vanish, then Q must be 0 and p must be 1
        let mut rng = stream_rng(4, 0);
        let n = 400;
        let h = 3;
        let mut s: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
        for _ in 0..200 {
            let m = mean(&s);
            for k in 1..=h {
                let denom: f64 = s.iter().map(|x| (x - m) * (x - m)).sum();
                let num: f64 = s[k..].iter().zip(s.iter()).map(|(&a, &b)| (a - m) * (b - m)).sum();
                let rho = num / denom;
                let prev = s.clone();
                for t in k..n {
                    s[t] -= rho * (prev[t - k] - m);
                }
            }
        }
        let r = ljung_box(&s, h).unwrap();
        assert!(r.statistic < 1e-10, "Q = {}", r.statistic);
        assert_close(r.p_value, 1.0, 1e-8);
        assert!(!r.decision_at_5pct);
    }

    #[test]
    fn ljung_box_rejects_ar1() {
        let mut rng = stream_rng(5, 0);
        let mut s = vec![0.0];
        for _ in 1..500 {
            s.push(0.9 * s.last().unwrap() + standard_normal(&mut rng));
        }
        let r = ljung_box(&s, 10).unwrap();
        assert!(r.p_value < 1e-6, "p = {}", r.p_value);
        assert!(r.decision_at_5pct);
    }

    #[test]
    fn ljung_box_p_monotone_in_q() {
        // p-value decreasing in Q at fixed dof
        let mut last = 1.0;
        for q in [0.0_f64, 2.0, 8.0, 15.0, 40.0] {
            let p = chi_square_sf(q.max(1e-300), 10);
            assert!(p <= last + 1e-15);
            last = p;
        }
    }

    #[test]
    fn adf_rejects_deterministic_decay() {
        let mut y = vec![100.0];
        for _ in 1..200 {
            y.push(0.5 * y.last().unwrap());
        }
        let r = adf_test(&y, AdfLagPolicy::Aic).unwrap();
        assert!(r.p_value < 0.01, "p = {}", r.p_value);
        assert!(r.decision_at_5pct);
    }

    #[test]
    fn adf_level_on_random_walks() {
        // fail-to-reject rate for a pure random walk should be near 95%
        let mut fails = 0;
        for seed in 0..100 {
            let mut rng = stream_rng(seed, 0);
            let mut y = vec![0.0];
            for _ in 1..400 {
                y.push(y.last().unwrap() + standard_normal(&mut rng));
            }
            let r = adf_test(&y, AdfLagPolicy::Aic).unwrap();
            if !r.decision_at_5pct {
                fails += 1;
            }
        }
        assert!(fails >= 85, "failed to reject only {fails}/100 random walks");
    }

    #[test]
    fn adf_scale_invariance() {
        let mut rng = stream_rng(6, 0);
        let mut y = vec![0.0];
        for _ in 1..300 {
            y.push(0.9 * y.last().unwrap() + standard_normal(&mut rng));
        }
        let r1 = adf_test(&y, AdfLagPolicy::Aic).unwrap();
        let scaled: Vec<f64> = y.iter().map(|v| v * 1000.0).collect();
        let r2 = adf_test(&scaled, AdfLagPolicy::Aic).unwrap();
        assert_close(r1.statistic, r2.statistic, 1e-8);
    }

    #[test]
    fn adf_rejects_short_series() {
        assert!(matches!(
            adf_test(&[1.0; 20], AdfLagPolicy::Aic),
            Err(DiagnoseError::TooShort { .. })
        ));
    }

    #[test]
    fn qq_self_consistency() {
        // feed the theoretical quantiles back in: the points must lie on
        // y = x up to the O(1/N) bias of the sample std of a finite
        // quantile grid
        let n = 100_000;
        let q: Vec<f64> = (0..n).map(|i| inv_normal_cdf((i as f64 + 0.5) / n as f64)).collect();
        let pairs = qq_data(&q).unwrap();
        let max_gap = pairs.iter().map(|(a, b)| (a - b).abs()).fold(0.0_f64, f64::max);
        assert!(max_gap < 5e-4, "max gap {max_gap}");
        // monotone in both coordinates
        assert!(pairs.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1));
    }

    #[test]
    fn qq_ten_integers() {
        let s: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let pairs = qq_data(&s).unwrap();
        assert_eq!(pairs.len(), 10);
        assert!(pairs.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1));
    }

    #[test]
    fn qq_heavy_tails_above_line() {
        // t(3)-like sample: normal over sqrt(chi2_3/3)
        let mut rng = stream_rng(7, 0);
        let n = 5000;
        let s: Vec<f64> = (0..n)
            .map(|_| {
                let z = standard_normal(&mut rng);
                let chi: f64 =
                    (0..3).map(|_| standard_normal(&mut rng).powi(2)).sum::<f64>() / 3.0;
                z / chi.sqrt()
            })
            .collect();
        let pairs = qq_data(&s).unwrap();
        // upper tail: standardized sample quantiles exceed the normal line
        let tail = &pairs[n - 50..];
        let above = tail.iter().filter(|(a, b)| b > a).count();
        assert!(above > 40, "{above}/50 above the line");
    }

    #[test]
    fn diagnostics_table_v_equal_one_collapses() {
        let mut rng = stream_rng(8, 0);
        let z: Vec<f64> = (0..200).map(|_| standard_normal(&mut rng)).collect();
        let table = diagnostics_table(&[z.clone()], &vec![1.0; 200]).unwrap();
        let c = &table.components[0];
        assert_close(c.skew_z, c.skew_z_over_v, 1e-14);
        assert_close(c.kurt_z, c.kurt_z_over_v, 1e-14);
    }

    #[test]
    fn diagnostics_table_vix_scaled_innovations() {
        // Z = V * N(0,1): dividing by V restores kurtosis 3, while the
        // raw series is leptokurtic
        let mut rng = stream_rng(9, 0);
        let n = 100_000;
        let mut v = Vec::with_capacity(n);
        let mut z = Vec::with_capacity(n);
        let mut lv = 2.8_f64;
        for _ in 0..n {
            lv = 0.34 + 0.88 * lv + 0.17 * standard_normal(&mut rng);
            let vol = lv.exp();
            v.push(vol);
            z.push(vol * standard_normal(&mut rng));
        }
        let table = diagnostics_table(&[z], &v).unwrap();
        let c = &table.components[0];
        assert!((c.kurt_z_over_v - 3.0).abs() < 0.1, "normalized kurt {}", c.kurt_z_over_v);
        assert!(c.kurt_z > 3.3, "raw kurt {}", c.kurt_z);
    }

    #[test]
    fn table_render_has_four_rows() {
        let t = DiagnosticsTable {
            components: vec![ComponentMoments {
                component: 1,
                skew_z: 0.1,
                skew_z_over_v: 0.2,
                kurt_z: 3.5,
                kurt_z_over_v: 3.9,
            }],
        };
        let text = t.render_text();
        assert_eq!(text.lines().count(), 5); // header + 4 moment rows
    }
}
