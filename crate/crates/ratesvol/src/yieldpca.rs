//! Principal component analysis of the rate panel.
//!
//! Covariance PCA on centered columns (the columns share percent units,
//! so no standardization), eigensolved by cyclic Jacobi rotations. Each
//! loading row's sign is fixed so its mean is nonnegative, which makes
//! the decomposition deterministic and preserves the usual
//! level/slope/curvature reading of the first three components.

use crate::ingest::RatePanel;
use crate::linalg::{self, Mat};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PcaError {
    #[error("component count {d} outside 1..={max}")]
    BadComponentCount { d: usize, max: usize },
    #[error("need more months than maturities: T={t}, M={m}")]
    TooFewRows { t: usize, m: usize },
    #[error("covariance numerically singular beyond requested rank: eigenvalue {value:.3e} at position {index}")]
    RankDeficient { index: usize, value: f64 },
    #[error("date index {t} out of range 0..{len}")]
    IndexOutOfRange { t: usize, len: usize },
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

/// Fitted principal component model of a rate panel.
#[derive(Debug, Clone)]
pub struct PcModel {
    /// Column means of the panel, percent, length M.
    pub mean_rates: Vec<f64>,
    /// d x M loading matrix; rows are orthonormal eigenvectors.
    pub loadings: Mat,
    /// Fraction of total variance per component, descending.
    pub variance_ratio: Vec<f64>,
    /// Eigenvalues behind the ratios, descending.
    pub eigenvalues: Vec<f64>,
    /// T x d score matrix.
    pub scores: Mat,
    /// Maturities of the panel columns, years.
    pub maturities: Vec<u32>,
}

impl PcModel {
    pub fn n_components(&self) -> usize {
        self.loadings.rows()
    }

    pub fn score_series(&self, component: usize) -> Vec<f64> {
        self.scores.col(component)
    }
}

/// Serializable view of a [`PcModel`] for the JSON interface.
#[derive(Debug, Serialize)]
pub struct PcModelDocument {
    pub schema: u32,
    pub maturities: Vec<u32>,
    pub mean_rates: Vec<f64>,
    pub variance_ratio: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub loadings: Vec<Vec<f64>>,
}

impl From<&PcModel> for PcModelDocument {
    fn from(m: &PcModel) -> Self {
        Self {
            schema: 1,
            maturities: m.maturities.clone(),
            mean_rates: m.mean_rates.clone(),
            variance_ratio: m.variance_ratio.clone(),
            eigenvalues: m.eigenvalues.clone(),
            loadings: m.loadings.to_nested(),
        }
    }
}

/// Fits a PCA with `d` components to the panel.
pub fn fit_pca(panel: &RatePanel, d: usize) -> Result<PcModel, PcaError> {
    let t = panel.n_months();
    let m = panel.n_maturities();
    if d < 1 || d > m {
        return Err(PcaError::BadComponentCount { d, max: m });
    }
    if t <= m {
        return Err(PcaError::TooFewRows { t, m });
    }

    let mean_rates: Vec<f64> = (0..m)
        .map(|j| (0..t).map(|i| panel.values[(i, j)]).sum::<f64>() / t as f64)
        .collect();
    let centered = Mat::from_fn(t, m, |i, j| panel.values[(i, j)] - mean_rates[j]);

    // sample covariance, 1/(T-1)
    let mut cov = Mat::zeros(m, m);
    for i in 0..t {
        let row = centered.row(i);
        for a in 0..m {
            for b in a..m {
                cov[(a, b)] += row[a] * row[b];
            }
        }
    }
    for a in 0..m {
        for b in a..m {
            let v = cov[(a, b)] / (t - 1) as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }

    let (eigenvalues_all, vectors) = linalg::sym_eigen(&cov)?;
    let trace: f64 = eigenvalues_all.iter().sum();
    let floor = 1e-12 * trace.max(1e-300);
    for (i, &ev) in eigenvalues_all.iter().take(d).enumerate() {
        if ev <= floor && i > 0 {
            return Err(PcaError::RankDeficient { index: i, value: ev });
        }
    }

    // sign convention: nonnegative row mean, ties broken by the first
    // nonzero entry, so refitting identical input is bit-identical
    let mut loadings = Mat::from_fn(d, m, |i, j| vectors[(i, j)]);
    for i in 0..d {
        let row_mean: f64 = loadings.row(i).iter().sum::<f64>() / m as f64;
        let flip = if row_mean != 0.0 {
            row_mean < 0.0
        } else {
            loadings.row(i).iter().find(|&&v| v != 0.0).is_some_and(|&v| v < 0.0)
        };
        if flip {
            for j in 0..m {
                loadings[(i, j)] = -loadings[(i, j)];
            }
        }
    }

    let scores = centered.matmul(&loadings.transpose());
    let variance_ratio: Vec<f64> =
        eigenvalues_all.iter().take(d).map(|&ev| if trace > 0.0 { ev / trace } else { 0.0 }).collect();

    Ok(PcModel {
        mean_rates,
        loadings,
        variance_ratio,
        eigenvalues: eigenvalues_all[..d].to_vec(),
        scores,
        maturities: panel.maturities.clone(),
    })
}

/// Reconstructs the rate vector at date index `t` from the model:
/// mean + loadings^T . scores(t).
pub fn reconstruct_rates(model: &PcModel, t: usize) -> Result<Vec<f64>, PcaError> {
    if t >= model.scores.rows() {
        return Err(PcaError::IndexOutOfRange { t, len: model.scores.rows() });
    }
    let d = model.n_components();
    let m = model.mean_rates.len();
    let mut out = model.mean_rates.clone();
    for (j, out_j) in out.iter_mut().enumerate().take(m) {
        for i in 0..d {
            *out_j += model.loadings[(i, j)] * model.scores[(t, i)];
        }
    }
    Ok(out)
}

/// Loading curves sampled at monthly maturities.
///
/// `gamma[i][l]` is the loading of component `i` at a maturity of `l`
/// months, for l in 0..=12*M; annual knots reproduce the fitted loadings
/// exactly and the curve is piecewise linear between them. Below 12
/// months the first segment extends linearly down to maturity zero. The
/// panel's column means get the same treatment so reconstructed
/// fractional-maturity rates keep their centering term.
#[derive(Debug, Clone, Serialize)]
pub struct LoadingCurve {
    /// Per component: gamma sampled at months 0..=12*M.
    pub gamma: Vec<Vec<f64>>,
    /// Interpolated mean rate by month, same sampling.
    pub mean_curve: Vec<f64>,
    /// Months covered: 12 * M.
    pub max_month: usize,
}

impl LoadingCurve {
    pub fn n_components(&self) -> usize {
        self.gamma.len()
    }

    /// Rate at month `l` for score vector `p`, percent.
    pub fn rate_at(&self, l: usize, p: &[f64]) -> f64 {
        let mut r = self.mean_curve[l];
        for (i, gi) in self.gamma.iter().enumerate() {
            r += gi[l] * p[i];
        }
        r
    }
}

/// Linear interpolation of annual loadings onto monthly maturities.
pub fn interpolate_loadings(model: &PcModel) -> LoadingCurve {
    let knots: Vec<usize> = model.maturities.iter().map(|&y| 12 * y as usize).collect();
    let max_month = *knots.last().expect("panel has maturities");
    let d = model.n_components();

    let mut gamma = Vec::with_capacity(d);
    for i in 0..d {
        let get = |k: usize| model.loadings[(i, k)];
        gamma.push((0..=max_month).map(|l| interp_linear(&knots, &get, l)).collect());
    }
    let get_mean = |k: usize| model.mean_rates[k];
    let mean_curve = (0..=max_month).map(|l| interp_linear(&knots, &get_mean, l)).collect();
    LoadingCurve { gamma, mean_curve, max_month }
}

/// Piecewise-linear interpolation through (knots[k], values(k)), with
/// linear extrapolation through the first two knots below the first one.
fn interp_linear(knots: &[usize], values: &dyn Fn(usize) -> f64, l: usize) -> f64 {
    let n = knots.len();
    debug_assert!(n >= 2);
    let lf = l as f64;
    let seg = if l <= knots[0] {
        0
    } else {
        match knots.iter().position(|&k| k >= l) {
            Some(j) => j.saturating_sub(1),
            None => n - 2,
        }
    };
    let (x0, x1) = (knots[seg] as f64, knots[seg + 1] as f64);
    let (y0, y1) = (values(seg), values(seg + 1));
    y0 + (y1 - y0) * (lf - x0) / (x1 - x0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dates::YearMonth;
    use crate::linalg::dot;

    fn panel_from_values(values: Mat) -> RatePanel {
        let mut dates = vec![YearMonth::new(1990, 1)];
        for _ in 1..values.rows() {
            dates.push(dates.last().unwrap().next());
        }
        let maturities: Vec<u32> = (1..=values.cols() as u32).collect();
        RatePanel { dates, maturities, values }
    }

    /// Brute-force eigenvalues of a symmetric 3x3 via the characteristic
    /// polynomial (trigonometric solution of the cubic); independent of
    /// the Jacobi path under test.
    fn char_poly_eigen_3x3(a: &Mat) -> Vec<f64> {
        let p1 = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        if p1 == 0.0 {
            let mut v = vec![a[(0, 0)], a[(1, 1)], a[(2, 2)]];
            v.sort_by(|x, y| y.partial_cmp(x).unwrap());
            return v;
        }
        let q = a.trace() / 3.0;
        let p2 = (a[(0, 0)] - q).powi(2) + (a[(1, 1)] - q).powi(2) + (a[(2, 2)] - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let mut b = Mat::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                b[(i, j)] = (a[(i, j)] - if i == j { q } else { 0.0 }) / p;
            }
        }
        let det_b = b[(0, 0)] * (b[(1, 1)] * b[(2, 2)] - b[(1, 2)] * b[(2, 1)])
            - b[(0, 1)] * (b[(1, 0)] * b[(2, 2)] - b[(1, 2)] * b[(2, 0)])
            + b[(0, 2)] * (b[(1, 0)] * b[(2, 1)] - b[(1, 1)] * b[(2, 0)]);
        let r = (det_b / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let e1 = q + 2.0 * p * phi.cos();
        let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        let e2 = 3.0 * q - e1 - e3;
        let mut v = vec![e1, e2, e3];
        v.sort_by(|x, y| y.partial_cmp(x).unwrap());
        v
    }

    #[test]
    fn equal_columns_give_single_component() {
        let values = Mat::from_fn(40, 4, |i, _| 3.0 + (i as f64 * 0.7).sin());
        let panel = panel_from_values(values);
        let model = fit_pca(&panel, 1).unwrap();
        assert!((model.variance_ratio[0] - 1.0).abs() < 1e-12);
        for j in 0..4 {
            assert!((model.loadings[(0, j)] - 0.5).abs() < 1e-10, "loading = 1/sqrt(M)");
        }
    }

    #[test]
    fn eigenpairs_match_char_poly_oracle() {
        // synthetic panel with a known, well-separated covariance
        let t = 200;
        let values = Mat::from_fn(t, 3, |i, j| {
            let x = (i as f64 * 0.31).sin();
            let y = (i as f64 * 0.77).cos();
            let z = (i as f64 * 1.13).sin() * (i as f64 * 0.07).cos();
            match j {
                0 => 4.0 + 2.0 * x + 0.3 * y,
                1 => 4.5 + 1.2 * x - 0.8 * y + 0.1 * z,
                _ => 5.0 + 0.5 * x + 0.2 * y - 0.4 * z,
            }
        });
        let panel = panel_from_values(values.clone());
        let model = fit_pca(&panel, 3).unwrap();

        let means: Vec<f64> =
            (0..3).map(|j| (0..t).map(|i| values[(i, j)]).sum::<f64>() / t as f64).collect();
        let mut cov = Mat::zeros(3, 3);
        for i in 0..t {
            for a in 0..3 {
                for b in 0..3 {
                    cov[(a, b)] += (values[(i, a)] - means[a]) * (values[(i, b)] - means[b]);
                }
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                cov[(a, b)] /= (t - 1) as f64;
            }
        }
        let oracle = char_poly_eigen_3x3(&cov);
        for (got, want) in model.eigenvalues.iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-8 * want.max(1.0), "{got} vs {want}");
        }
        // eigenvector property: cov v = lambda v
        for i in 0..3 {
            let v: Vec<f64> = model.loadings.row(i).to_vec();
            let av = cov.matvec(&v);
            for j in 0..3 {
                assert!((av[j] - model.eigenvalues[i] * v[j]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn loadings_orthonormal_scores_centered_uncorrelated() {
        let t = 120;
        let values = Mat::from_fn(t, 5, |i, j| {
            4.0 + (i as f64 * 0.11 + j as f64).sin() + 0.4 * (i as f64 * 0.53).cos() * j as f64
        });
        let panel = panel_from_values(values);
        let model = fit_pca(&panel, 3).unwrap();

        for a in 0..3 {
            for b in 0..3 {
                let g = dot(model.loadings.row(a), model.loadings.row(b));
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-10);
            }
        }
        let ratios = &model.variance_ratio;
        assert!(ratios.windows(2).all(|w| w[0] >= w[1]));
        assert!(ratios.iter().sum::<f64>() <= 1.0 + 1e-12);

        for c in 0..3 {
            let s = model.score_series(c);
            let m = crate::linalg::mean(&s);
            let sd = crate::linalg::variance(&s, 1).sqrt();
            assert!(m.abs() < 1e-10 * sd.max(1.0), "score mean {m}");
        }
        for a in 0..3 {
            for b in a + 1..3 {
                let sa = model.score_series(a);
                let sb = model.score_series(b);
                let cov = dot(&sa, &sb) / (t - 1) as f64;
                let scale = (model.eigenvalues[a] * model.eigenvalues[b]).sqrt();
                assert!(cov.abs() < 1e-8 * scale.max(1e-12), "cov {cov}");
            }
        }
        // variance ratio against a direct trace computation
        let trace: f64 = (0..5).map(|j| crate::linalg::variance(&panel.values.col(j), 1)).sum();
        for (i, r) in ratios.iter().enumerate() {
            assert!((r - model.eigenvalues[i] / trace).abs() < 1e-10);
        }
    }

    #[test]
    fn refit_is_bit_identical() {
        let values = Mat::from_fn(60, 4, |i, j| 3.0 + ((i * (j + 2)) as f64 * 0.17).sin());
        let panel = panel_from_values(values);
        let a = fit_pca(&panel, 2).unwrap();
        let b = fit_pca(&panel, 2).unwrap();
        assert_eq!(a.loadings.data(), b.loadings.data());
        assert_eq!(a.scores.data(), b.scores.data());
        assert_eq!(a.variance_ratio, b.variance_ratio);
    }

    #[test]
    fn reconstruction_complete_basis_is_exact() {
        // three independent harmonics keep the covariance full rank
        let freqs = [0.2, 0.53, 1.31];
        let values = Mat::from_fn(50, 3, |i, j| {
            4.0 + (i as f64 * freqs[j]).sin() * (1.0 + j as f64) + 0.1 * (i as f64 * freqs[(j + 1) % 3]).cos()
        });
        let panel = panel_from_values(values.clone());
        let model = fit_pca(&panel, 3).unwrap();
        for t in [0, 7, 49] {
            let r = reconstruct_rates(&model, t).unwrap();
            for j in 0..3 {
                assert!((r[j] - values[(t, j)]).abs() < 1e-10);
            }
        }
        assert!(matches!(reconstruct_rates(&model, 50), Err(PcaError::IndexOutOfRange { .. })));
    }

    #[test]
    fn truncated_residual_orthogonal_to_loading() {
        let values = Mat::from_fn(80, 4, |i, j| {
            4.0 + (i as f64 * 0.3).sin() * (j as f64 + 1.0) + 0.2 * (i as f64 * 1.1 + j as f64).cos()
        });
        let panel = panel_from_values(values.clone());
        let model = fit_pca(&panel, 1).unwrap();
        for t in [0, 10, 79] {
            let recon = reconstruct_rates(&model, t).unwrap();
            let resid: Vec<f64> = (0..4).map(|j| values[(t, j)] - recon[j]).collect();
            assert!(dot(&resid, model.loadings.row(0)).abs() < 1e-10);
        }
    }

    #[test]
    fn interpolation_midpoint_and_knots() {
        let model = PcModel {
            mean_rates: vec![4.0, 5.0],
            loadings: Mat::from_rows(&[vec![0.3, 0.5]]),
            variance_ratio: vec![1.0],
            eigenvalues: vec![1.0],
            scores: Mat::zeros(10, 1),
            maturities: vec![1, 2],
        };
        let curve = interpolate_loadings(&model);
        assert_eq!(curve.max_month, 24);
        assert!((curve.gamma[0][18] - 0.4).abs() < 1e-14, "midpoint");
        assert!((curve.gamma[0][12] - 0.3).abs() < 1e-14, "knot");
        assert!((curve.gamma[0][24] - 0.5).abs() < 1e-14, "knot");
        // first segment extends linearly down to maturity zero
        assert!((curve.gamma[0][0] - (0.3 - 0.2)).abs() < 1e-14);
        assert!((curve.gamma[0][6] - 0.2).abs() < 1e-13);
        assert!((curve.mean_curve[18] - 4.5).abs() < 1e-12);
        assert!((curve.mean_curve[0] - 3.0).abs() < 1e-12);
    }
}
