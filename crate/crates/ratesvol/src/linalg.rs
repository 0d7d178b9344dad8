//! Small dense matrix routines.
//!
//! Problem sizes here are tiny (eigenproblems up to 10x10, regression
//! designs with a handful of columns), so the implementations favour
//! numerical robustness and determinism over speed: Householder QR with
//! column pivoting for least squares, cyclic Jacobi for symmetric
//! eigenproblems, Hessenberg reduction plus Francis double-shift QR for
//! general real spectra.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is singular (pivot {pivot} below tolerance at column {col})")]
    Singular { col: usize, pivot: f64 },
    #[error("design matrix is rank deficient: column rank {rank} < {cols}")]
    RankDeficient { rank: usize, cols: usize },
    #[error("matrix is not positive definite (leading minor {0})")]
    NotPositiveDefinite(usize),
    #[error("eigenvalue iteration failed to converge within {0} iterations")]
    NoConvergence(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Dense row-major matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// x^T applied from the left: returns self^T * v.
    pub fn t_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "t_matvec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for (j, o) in out.iter_mut().enumerate() {
                *o += self[(i, j)] * vi;
            }
        }
        out
    }

    pub fn scale(&self, k: f64) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * k).collect() }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn to_nested(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Solves a square system `a x = b` by LU with partial pivoting.
pub fn solve(a: &Mat, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "solve: a is {}x{}, b has length {}",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    let mut lu = a.clone();
    let mut x = b.to_vec();
    let scale = lu.data.iter().map(|v| v.abs()).fold(0.0_f64, f64::max).max(1.0);
    for k in 0..n {
        let mut piv = k;
        for i in k + 1..n {
            if lu[(i, k)].abs() > lu[(piv, k)].abs() {
                piv = i;
            }
        }
        if lu[(piv, k)].abs() <= 1e-14 * scale {
            return Err(LinalgError::Singular { col: k, pivot: lu[(piv, k)] });
        }
        if piv != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = t;
            }
            x.swap(k, piv);
        }
        for i in k + 1..n {
            let f = lu[(i, k)] / lu[(k, k)];
            lu[(i, k)] = f;
            for j in k + 1..n {
                let v = lu[(k, j)];
                lu[(i, j)] -= f * v;
            }
            x[i] -= f * x[k];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s -= lu[(i, j)] * x[j];
        }
        x[i] = s / lu[(i, i)];
    }
    Ok(x)
}

/// Cholesky factor (lower triangular) of a symmetric positive
/// semi-definite matrix. Tiny negative pivots from roundoff are clamped
/// to zero so that empirical covariance matrices of nearly collinear
/// residuals still factor.
pub fn cholesky_psd(a: &Mat) -> Result<Mat, LinalgError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(LinalgError::DimensionMismatch("cholesky: not square".into()));
    }
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0_f64, f64::max).max(1e-300);
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if s < -1e-8 * scale {
                    return Err(LinalgError::NotPositiveDefinite(i));
                }
                l[(i, j)] = s.max(0.0).sqrt();
            } else if l[(j, j)] > 0.0 {
                l[(i, j)] = s / l[(j, j)];
            } else {
                l[(i, j)] = 0.0;
            }
        }
    }
    Ok(l)
}

/// Output of a least-squares solve.
#[derive(Debug, Clone)]
pub struct Lstsq {
    pub coefficients: Vec<f64>,
    /// Diagonal of (X^T X)^{-1}, for coefficient standard errors.
    pub xtx_inv_diag: Vec<f64>,
    pub rank: usize,
}

/// Least squares via Householder QR with column pivoting.
///
/// Rank deficiency is declared when a pivoted diagonal of R falls below
/// `rank_tol` relative to the largest one.
pub fn lstsq(x: &Mat, y: &[f64], rank_tol: f64) -> Result<Lstsq, LinalgError> {
    let n = x.rows();
    let k = x.cols();
    if y.len() != n {
        return Err(LinalgError::DimensionMismatch("lstsq: y length != rows".into()));
    }
    if n < k {
        return Err(LinalgError::RankDeficient { rank: n, cols: k });
    }
    let mut r = x.clone();
    let mut qty = y.to_vec();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut col_norms: Vec<f64> = (0..k)
        .map(|j| (0..n).map(|i| r[(i, j)] * r[(i, j)]).sum::<f64>())
        .collect();

    for step in 0..k {
        // column pivot: move the column with largest remaining norm up front
        let (best, _) = col_norms
            .iter()
            .enumerate()
            .skip(step)
            .fold((step, -1.0), |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc });
        if best != step {
            for i in 0..n {
                let t = r[(i, step)];
                r[(i, step)] = r[(i, best)];
                r[(i, best)] = t;
            }
            perm.swap(step, best);
            col_norms.swap(step, best);
        }

        // Householder reflection zeroing below the diagonal of column `step`
        let mut norm = 0.0;
        for i in step..n {
            norm += r[(i, step)] * r[(i, step)];
        }
        let norm = norm.sqrt();
        if norm > 0.0 {
            let alpha = if r[(step, step)] >= 0.0 { -norm } else { norm };
            let mut v = vec![0.0; n - step];
            v[0] = r[(step, step)] - alpha;
            for i in step + 1..n {
                v[i - step] = r[(i, step)];
            }
            let vtv: f64 = v.iter().map(|a| a * a).sum();
            if vtv > 0.0 {
                for j in step..k {
                    let mut dot = 0.0;
                    for i in step..n {
                        dot += v[i - step] * r[(i, j)];
                    }
                    let f = 2.0 * dot / vtv;
                    for i in step..n {
                        r[(i, j)] -= f * v[i - step];
                    }
                }
                let mut dot = 0.0;
                for i in step..n {
                    dot += v[i - step] * qty[i];
                }
                let f = 2.0 * dot / vtv;
                for i in step..n {
                    qty[i] -= f * v[i - step];
                }
            }
            r[(step, step)] = alpha;
            for i in step + 1..n {
                r[(i, step)] = 0.0;
            }
        }
        for (j, cn) in col_norms.iter_mut().enumerate().skip(step + 1) {
            *cn -= r[(step, j)] * r[(step, j)];
        }
    }

    let rmax = (0..k).map(|i| r[(i, i)].abs()).fold(0.0_f64, f64::max);
    let rank = (0..k).take_while(|&i| r[(i, i)].abs() > rank_tol * rmax.max(1e-300)).count();
    if rank < k {
        return Err(LinalgError::RankDeficient { rank, cols: k });
    }

    // back-substitute R beta_perm = Q^T y
    let mut beta_p = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = qty[i];
        for j in i + 1..k {
            s -= r[(i, j)] * beta_p[j];
        }
        beta_p[i] = s / r[(i, i)];
    }

    // (X^T X)^{-1} = P R^{-1} R^{-T} P^T ; we only need its diagonal.
    // Compute R^{-1} (upper triangular) explicitly: k is small.
    let mut rinv = Mat::zeros(k, k);
    for j in 0..k {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        for i in (0..=j).rev() {
            let mut s = e[i];
            for l in i + 1..=j {
                s -= r[(i, l)] * rinv[(l, j)];
            }
            rinv[(i, j)] = s / r[(i, i)];
        }
    }
    let mut diag_p = vec![0.0; k];
    for (i, d) in diag_p.iter_mut().enumerate() {
        *d = (i..k).map(|j| rinv[(i, j)] * rinv[(i, j)]).sum();
    }

    let mut coefficients = vec![0.0; k];
    let mut xtx_inv_diag = vec![0.0; k];
    for i in 0..k {
        coefficients[perm[i]] = beta_p[i];
        xtx_inv_diag[perm[i]] = diag_p[i];
    }
    Ok(Lstsq { coefficients, xtx_inv_diag, rank })
}

/// Eigen decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Sweeps run until the off-diagonal Frobenius norm drops below
/// `1e-12 * trace` (or machine floor for traceless input). Returns
/// eigenvalues in descending order with matching eigenvectors as rows.
pub fn sym_eigen(a: &Mat) -> Result<(Vec<f64>, Mat), LinalgError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(LinalgError::DimensionMismatch("sym_eigen: not square".into()));
    }
    let mut m = a.clone();
    let mut v = Mat::identity(n);
    let tol_scale = m.trace().abs().max(m.frobenius_norm()).max(1e-300);
    let tol = 1e-12 * tol_scale;

    let off = |m: &Mat| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)] * m[(i, j)];
                }
            }
        }
        s.sqrt()
    };

    let max_sweeps = 100;
    let mut sweeps = 0;
    while off(&m) > tol {
        sweeps += 1;
        if sweeps > max_sweeps {
            return Err(LinalgError::NoConvergence(max_sweeps));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol / (n as f64 * n as f64) {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = c * mip - s * miq;
                    m[(i, q)] = s * mip + c * miq;
                }
                for j in 0..n {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = c * mpj - s * mqj;
                    m[(q, j)] = s * mpj + c * mqj;
                }
                for j in 0..n {
                    let vpj = v[(p, j)];
                    let vqj = v[(q, j)];
                    v[(p, j)] = c * vpj - s * vqj;
                    v[(q, j)] = s * vpj + c * vqj;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].partial_cmp(&m[(i, i)]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Mat::from_fn(n, n, |i, j| v[(order[i], j)]);
    Ok((values, vectors))
}

/// A complex number represented as a (re, im) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// Eigenvalues of a general real square matrix via Hessenberg reduction
/// followed by Francis double-shift QR iteration.
///
/// Subdiagonal entries are deflated at a relative tolerance of 1e-10;
/// the iteration budget is `100 * n^2` as a whole.
pub fn eigenvalues(a: &Mat) -> Result<Vec<Complex>, LinalgError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(LinalgError::DimensionMismatch("eigenvalues: not square".into()));
    }
    if n == 0 {
        return Ok(vec![]);
    }
    let mut h = hessenberg(a);
    let tol = 1e-10;
    let max_iter = 100 * n * n;
    let mut iter = 0;
    let mut eigs: Vec<Complex> = Vec::with_capacity(n);
    let mut hi = n; // active block is rows/cols 0..hi

    while hi > 0 {
        // deflate converged subdiagonals
        let mut deflated = true;
        while deflated && hi > 0 {
            deflated = false;
            if hi == 1 {
                eigs.push(Complex::new(h[(0, 0)], 0.0));
                hi = 0;
                break;
            }
            let s = h[(hi - 1, hi - 1)].abs() + h[(hi - 2, hi - 2)].abs();
            if h[(hi - 1, hi - 2)].abs() <= tol * s.max(1e-300) {
                eigs.push(Complex::new(h[(hi - 1, hi - 1)], 0.0));
                hi -= 1;
                deflated = true;
            } else if hi >= 2 {
                let small_above = if hi == 2 {
                    true
                } else {
                    let s2 = h[(hi - 2, hi - 2)].abs() + h[(hi - 3, hi - 3)].abs();
                    h[(hi - 2, hi - 3)].abs() <= tol * s2.max(1e-300)
                };
                if small_above {
                    // bottom 2x2 block is isolated: take its eigenvalues
                    let (e1, e2) = eig2(
                        h[(hi - 2, hi - 2)],
                        h[(hi - 2, hi - 1)],
                        h[(hi - 1, hi - 2)],
                        h[(hi - 1, hi - 1)],
                    );
                    eigs.push(e1);
                    eigs.push(e2);
                    hi -= 2;
                    deflated = true;
                }
            }
        }
        if hi == 0 {
            break;
        }

        iter += 1;
        if iter > max_iter {
            return Err(LinalgError::NoConvergence(max_iter));
        }

        // find the start of the active unreduced block
        let mut lo = hi - 1;
        while lo > 0 {
            let s = h[(lo, lo)].abs() + h[(lo - 1, lo - 1)].abs();
            if h[(lo, lo - 1)].abs() <= tol * s.max(1e-300) {
                break;
            }
            lo -= 1;
        }

        francis_step(&mut h, lo, hi, iter);
    }

    // deterministic order: by descending modulus, then descending real part
    eigs.sort_by(|a, b| {
        b.abs()
            .partial_cmp(&a.abs())
            .unwrap()
            .then(b.re.partial_cmp(&a.re).unwrap())
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
    Ok(eigs)
}

/// Largest eigenvalue modulus of a general real square matrix.
pub fn spectral_radius(a: &Mat) -> Result<f64, LinalgError> {
    Ok(eigenvalues(a)?.first().map(|e| e.abs()).unwrap_or(0.0))
}

fn hessenberg(a: &Mat) -> Mat {
    let n = a.rows();
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        let mut norm = 0.0;
        for i in k + 1..n {
            norm += h[(i, k)] * h[(i, k)];
        }
        let norm = norm.sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if h[(k + 1, k)] >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; n - k - 1];
        v[0] = h[(k + 1, k)] - alpha;
        for i in k + 2..n {
            v[i - k - 1] = h[(i, k)];
        }
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        if vtv == 0.0 {
            continue;
        }
        // H <- (I - 2vv^T/v^Tv) H
        for j in k..n {
            let mut dot = 0.0;
            for i in k + 1..n {
                dot += v[i - k - 1] * h[(i, j)];
            }
            let f = 2.0 * dot / vtv;
            for i in k + 1..n {
                h[(i, j)] -= f * v[i - k - 1];
            }
        }
        // H <- H (I - 2vv^T/v^Tv)
        for i in 0..n {
            let mut dot = 0.0;
            for j in k + 1..n {
                dot += h[(i, j)] * v[j - k - 1];
            }
            let f = 2.0 * dot / vtv;
            for j in k + 1..n {
                h[(i, j)] -= f * v[j - k - 1];
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = 0.0;
        }
    }
    h
}

/// Eigenvalues of a real 2x2 matrix.
fn eig2(a: f64, b: f64, c: f64, d: f64) -> (Complex, Complex) {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (Complex::new(tr / 2.0 + s, 0.0), Complex::new(tr / 2.0 - s, 0.0))
    } else {
        let s = (-disc).sqrt();
        (Complex::new(tr / 2.0, s), Complex::new(tr / 2.0, -s))
    }
}

/// One implicit double-shift QR step on the active block `lo..hi` of an
/// upper Hessenberg matrix. Occasionally (every 10th stall) an ad-hoc
/// exceptional shift is used, following the classic EISPACK scheme.
fn francis_step(h: &mut Mat, lo: usize, hi: usize, iter: usize) {
    let n = h.rows();
    let m = hi - 1;
    if hi - lo == 1 {
        return;
    }

    let (s, p);
    if iter % 30 == 0 && iter > 0 {
        // exceptional shift to break rare cycling
        let w = h[(m, m - 1)].abs() + if m >= 2 { h[(m - 1, m - 2)].abs() } else { 0.0 };
        s = 1.5 * w;
        p = w * w;
    } else {
        // shifts from the trailing 2x2 block: sum and product of its eigenvalues
        s = h[(m - 1, m - 1)] + h[(m, m)];
        p = h[(m - 1, m - 1)] * h[(m, m)] - h[(m - 1, m)] * h[(m, m - 1)];
    }

    // first column of (H - s1)(H - s2)
    let mut x = h[(lo, lo)] * h[(lo, lo)] + h[(lo, lo + 1)] * h[(lo + 1, lo)] - s * h[(lo, lo)] + p;
    let mut y = h[(lo + 1, lo)] * (h[(lo, lo)] + h[(lo + 1, lo + 1)] - s);
    let mut z = if lo + 2 < hi { h[(lo + 1, lo)] * h[(lo + 2, lo + 1)] } else { 0.0 };

    for k in lo..hi - 1 {
        // Householder on (x, y, z)
        let scale = x.abs() + y.abs() + z.abs();
        if scale == 0.0 {
            if k + 1 < hi - 1 {
                x = h[(k + 1, k)];
                y = h[(k + 2, k)];
                z = if k + 3 < hi { h[(k + 3, k)] } else { 0.0 };
            }
            continue;
        }
        let (xs, ys, zs) = (x / scale, y / scale, z / scale);
        let norm = (xs * xs + ys * ys + zs * zs).sqrt();
        let alpha = if xs >= 0.0 { -norm } else { norm };
        let v = [xs - alpha, ys, zs];
        let vtv: f64 = v.iter().map(|a| a * a).sum();
        if vtv > 0.0 {
            let r_end = (k + 4).min(hi);
            // apply from the left to rows k..r_end
            let cstart = k.saturating_sub(1).max(lo);
            for j in cstart..n {
                let mut dot = 0.0;
                for (idx, vi) in v.iter().enumerate() {
                    if k + idx < hi {
                        dot += vi * h[(k + idx, j)];
                    }
                }
                let f = 2.0 * dot / vtv;
                for (idx, vi) in v.iter().enumerate() {
                    if k + idx < hi {
                        h[(k + idx, j)] -= f * vi;
                    }
                }
            }
            // apply from the right to all rows
            for i in 0..r_end {
                let mut dot = 0.0;
                for (idx, vi) in v.iter().enumerate() {
                    if k + idx < hi {
                        dot += h[(i, k + idx)] * vi;
                    }
                }
                let f = 2.0 * dot / vtv;
                for (idx, vi) in v.iter().enumerate() {
                    if k + idx < hi {
                        h[(i, k + idx)] -= f * vi;
                    }
                }
            }
        }
        if k + 1 < hi - 1 {
            x = h[(k + 1, k)];
            y = h[(k + 2, k)];
            z = if k + 3 < hi { h[(k + 3, k)] } else { 0.0 };
        }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the given delta degrees of freedom (0 for the
/// 1/N population convention, 1 for the unbiased 1/(N-1) convention).
pub fn variance(xs: &[f64], ddof: usize) -> f64 {
    let n = xs.len();
    if n <= ddof {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - ddof) as f64
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
