//! Path generation for the fitted system and Monte Carlo verification of
//! its long-run behavior.
//!
//! Discrete mode iterates the autoregression directly. Continuous mode
//! treats the stored parameters through the mapping B_ct = I - B,
//! beta_ct = 1 - beta (a and c unchanged, time unit one month): the log
//! volatility advances by its exact Ornstein-Uhlenbeck transition so
//! that all discretization error is isolated in the Euler-Maruyama step
//! for the factor vector.
//!
//! Replications are embarrassingly parallel. Each owns an RNG stream
//! derived from (seed, replication index) and results merge by a
//! deterministic reduction ordered by index, so outputs do not depend on
//! the thread count.

use crate::estimate::{check_stability, ArSvModel, EstimateError};
use crate::linalg::{self, Mat};
use crate::rng::{stream_rng, GaussianVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("state norm exceeded {STATE_NORM_LIMIT:e} at step {step}")]
    NonFiniteState { step: usize },
    #[error("step too large: h * spectral_radius(B_ct) = {0:.3} > 0.5")]
    StepTooLarge(f64),
    #[error("model is not stationary: spectral radius {radius:.4}, beta {beta:.4}")]
    Unstable { radius: f64, beta: f64 },
    #[error("empty simulation: steps = 0")]
    NoSteps,
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

/// Overflow guard: abort instead of propagating infinities.
pub const STATE_NORM_LIMIT: f64 = 1e12;

/// Which dynamics to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    Discrete,
    Continuous,
}

/// RNG provenance of a path.
#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
pub struct SeedRecord {
    pub seed: u64,
    pub replication: u64,
}

/// A jointly simulated (V, X) trajectory.
#[derive(Debug, Clone)]
pub struct SimPath {
    /// Time stamps: step indices in discrete mode, multiples of h
    /// (months) in continuous mode.
    pub times: Vec<f64>,
    pub v: Vec<f64>,
    /// Row t is X(t), d columns.
    pub x: Mat,
    pub seed: SeedRecord,
}

impl SimPath {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Time average of each factor over the path (initial point skipped).
    pub fn time_average_x(&self) -> Vec<f64> {
        let d = self.x.cols();
        let n = self.len() - 1;
        let mut out = vec![0.0; d];
        for t in 1..self.len() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += self.x[(t, j)];
            }
        }
        out.iter_mut().for_each(|o| *o /= n as f64);
        out
    }

    /// Time average of |X|^2 (the largest function class the continuous
    /// LLN covers).
    pub fn time_average_sq_norm(&self) -> f64 {
        let n = self.len() - 1;
        let mut s = 0.0;
        for t in 1..self.len() {
            for j in 0..self.x.cols() {
                s += self.x[(t, j)] * self.x[(t, j)];
            }
        }
        s / n as f64
    }

    /// Time average of v^u over the path.
    pub fn time_average_v_power(&self, u: f64) -> f64 {
        let n = self.len() - 1;
        self.v.iter().skip(1).map(|&v| v.powf(u)).sum::<f64>() / n as f64
    }
}

/// Continuous-time reading of the stored (discrete) parameters.
#[derive(Debug, Clone)]
pub struct ContinuousView {
    pub alpha: f64,
    pub beta: f64,
    pub b: Mat,
}

impl ArSvModel {
    /// Mapping B_ct = I - B, beta_ct = 1 - beta; a, c, and the noise
    /// scales carry over with a one-month time unit.
    pub fn continuous_view(&self) -> ContinuousView {
        let d = self.dim();
        let b = Mat::from_fn(d, d, |i, j| {
            let eye = if i == j { 1.0 } else { 0.0 };
            eye - self.b[(i, j)]
        });
        ContinuousView { alpha: self.alpha, beta: 1.0 - self.beta, b }
    }
}

fn default_init(model: &ArSvModel) -> (f64, Vec<f64>) {
    let ln_v0 = if (1.0 - model.beta).abs() > 1e-9 { model.alpha / (1.0 - model.beta) } else { 0.0 };
    let x0 = stationary_mean_discrete(model).unwrap_or_else(|_| vec![0.0; model.dim()]);
    (ln_v0.exp(), x0)
}

fn correlation_matrix(cov: &Mat) -> Mat {
    let n = cov.rows();
    Mat::from_fn(n, n, |i, j| {
        let d = (cov[(i, i)] * cov[(j, j)]).sqrt();
        if d > 0.0 {
            (cov[(i, j)] / d).clamp(-1.0, 1.0)
        } else if i == j {
            1.0
        } else {
            0.0
        }
    })
}

fn check_state(x: &[f64], v: f64, step: usize) -> Result<(), SimError> {
    let norm2: f64 = x.iter().map(|a| a * a).sum();
    if !norm2.is_finite() || norm2 > STATE_NORM_LIMIT * STATE_NORM_LIMIT || !v.is_finite() || v > STATE_NORM_LIMIT
    {
        return Err(SimError::NonFiniteState { step });
    }
    Ok(())
}

/// Simulates the discrete-time system for `steps` transitions after the
/// initial point (path length is steps + 1).
pub fn simulate_discrete(
    model: &ArSvModel,
    steps: usize,
    seed: u64,
    init: Option<(f64, Vec<f64>)>,
) -> Result<SimPath, SimError> {
    simulate_discrete_stream(model, steps, SeedRecord { seed, replication: 0 }, init)
}

fn simulate_discrete_stream(
    model: &ArSvModel,
    steps: usize,
    seed: SeedRecord,
    init: Option<(f64, Vec<f64>)>,
) -> Result<SimPath, SimError> {
    if steps == 0 {
        return Err(SimError::NoSteps);
    }
    let d = model.dim();
    let (v0, x0) = init.unwrap_or_else(|| default_init(model));
    let mut rng = stream_rng(seed.seed, seed.replication);
    let gv = GaussianVector::new(&model.resid_cov)?;

    let mut v = Vec::with_capacity(steps + 1);
    let mut x = Mat::zeros(steps + 1, d);
    v.push(v0);
    let mut ln_v = v0.ln();
    for (j, &x0j) in x0.iter().enumerate() {
        x[(0, j)] = x0j;
    }

    let mut xt = x0;
    for t in 1..=steps {
        let z = gv.sample(&mut rng);
        ln_v = model.alpha + model.beta * ln_v + z[0];
        let vt = ln_v.exp();
        let mut next = vec![0.0; d];
        for i in 0..d {
            let mut s = model.a[i] + model.c[i] * vt;
            for j in 0..d {
                s += model.b[(i, j)] * xt[j];
            }
            let scale = if model.is_vix_scaled(i + 1) { vt } else { 1.0 };
            next[i] = s + scale * z[i + 1];
        }
        check_state(&next, vt, t)?;
        v.push(vt);
        for (j, &nj) in next.iter().enumerate() {
            x[(t, j)] = nj;
        }
        xt = next;
    }

    Ok(SimPath { times: (0..=steps).map(|t| t as f64).collect(), v, x, seed })
}

/// Simulates the continuous-time system by Euler-Maruyama over
/// `steps` increments of size `h` months. The log volatility uses its
/// exact Gaussian transition.
pub fn simulate_continuous(
    model: &ArSvModel,
    steps: usize,
    h: f64,
    seed: u64,
    init: Option<(f64, Vec<f64>)>,
) -> Result<SimPath, SimError> {
    simulate_continuous_stream(model, steps, h, SeedRecord { seed, replication: 0 }, init)
}

fn simulate_continuous_stream(
    model: &ArSvModel,
    steps: usize,
    h: f64,
    seed: SeedRecord,
    init: Option<(f64, Vec<f64>)>,
) -> Result<SimPath, SimError> {
    if steps == 0 {
        return Err(SimError::NoSteps);
    }
    assert!(h > 0.0, "step must be positive");
    let ct = model.continuous_view();
    let d = model.dim();

    let radius = linalg::spectral_radius(&ct.b)?;
    if h * radius > 0.5 {
        return Err(SimError::StepTooLarge(h * radius));
    }

    // exact OU transition for ln V over one step of size h
    let decay = (-ct.beta * h).exp();
    let ln_v_mean_const = if ct.beta.abs() > 1e-12 { (ct.alpha / ct.beta) * (1.0 - decay) } else { ct.alpha * h };
    let ln_v_std = if ct.beta.abs() > 1e-12 {
        (model.sigma0 * model.sigma0 * (1.0 - (-2.0 * ct.beta * h).exp()) / (2.0 * ct.beta)).sqrt()
    } else {
        model.sigma0 * h.sqrt()
    };

    let corr = correlation_matrix(&model.resid_cov);
    let gv = GaussianVector::new(&corr)?;
    let sqrt_h = h.sqrt();

    let (v0, x0) = init.unwrap_or_else(|| default_init(model));
    let mut rng = stream_rng(seed.seed, seed.replication);

    let mut v = Vec::with_capacity(steps + 1);
    let mut x = Mat::zeros(steps + 1, d);
    v.push(v0);
    let mut ln_v = v0.ln();
    for (j, &x0j) in x0.iter().enumerate() {
        x[(0, j)] = x0j;
    }

    let mut xt = x0;
    for t in 1..=steps {
        let eta = gv.sample(&mut rng);
        ln_v = decay * ln_v + ln_v_mean_const + ln_v_std * eta[0];
        let vt = ln_v.exp();
        let mut next = vec![0.0; d];
        for i in 0..d {
            let mut drift = model.a[i] + model.c[i] * vt;
            for j in 0..d {
                drift -= ct.b[(i, j)] * xt[j];
            }
            let scale = if model.is_vix_scaled(i + 1) { vt } else { 1.0 };
            next[i] = xt[i] + drift * h + scale * model.noise_scales[i] * sqrt_h * eta[i + 1];
        }
        check_state(&next, vt, t)?;
        v.push(vt);
        for (j, &nj) in next.iter().enumerate() {
            x[(t, j)] = nj;
        }
        xt = next;
    }

    Ok(SimPath { times: (0..=steps).map(|t| t as f64 * h).collect(), v, x, seed })
}

fn require_stable(model: &ArSvModel) -> Result<(), SimError> {
    let rep = check_stability(model)?;
    if !rep.stationary_ok {
        return Err(SimError::Unstable { radius: rep.spectral_radius_b, beta: model.beta });
    }
    Ok(())
}

/// First moment of V under the discrete stationary law with Gaussian
/// innovations: exp(mu_inf + sigma_inf^2 / 2).
pub fn stationary_v_mean_discrete(model: &ArSvModel) -> f64 {
    let mu = model.alpha / (1.0 - model.beta);
    let s2 = model.sigma0 * model.sigma0 / (1.0 - model.beta * model.beta);
    (mu + 0.5 * s2).exp()
}

/// Closed-form stationary mean of X in discrete time:
/// (I - B)^{-1} (a + c m1), solved as a linear system.
pub fn stationary_mean_discrete(model: &ArSvModel) -> Result<Vec<f64>, SimError> {
    require_stable(model)?;
    let d = model.dim();
    let m1 = stationary_v_mean_discrete(model);
    let rhs: Vec<f64> = (0..d).map(|i| model.a[i] + model.c[i] * m1).collect();
    let i_minus_b = Mat::from_fn(d, d, |i, j| (if i == j { 1.0 } else { 0.0 }) - model.b[(i, j)]);
    Ok(linalg::solve(&i_minus_b, &rhs)?)
}

/// First moment of V under the continuous stationary law:
/// exp(alpha/beta_ct + sigma0^2 / (4 beta_ct)).
pub fn stationary_v_mean_continuous(model: &ArSvModel) -> f64 {
    let ct = model.continuous_view();
    (ct.alpha / ct.beta + model.sigma0 * model.sigma0 / (4.0 * ct.beta)).exp()
}

/// Stationary mean of X in continuous time: B_ct^{-1} (a + c m1). The
/// drift-balance derivation needs every eigenvalue of B_ct in the right
/// half plane and beta_ct > 0.
pub fn stationary_mean_continuous(model: &ArSvModel) -> Result<Vec<f64>, SimError> {
    let ct = model.continuous_view();
    let eigs = linalg::eigenvalues(&ct.b)?;
    let min_re = eigs.iter().map(|e| e.re).fold(f64::INFINITY, f64::min);
    if min_re <= 0.0 || ct.beta <= 0.0 {
        return Err(SimError::Unstable { radius: 1.0 - min_re, beta: model.beta });
    }
    let d = model.dim();
    let m1 = stationary_v_mean_continuous(model);
    let rhs: Vec<f64> = (0..d).map(|i| model.a[i] + model.c[i] * m1).collect();
    Ok(linalg::solve(&ct.b, &rhs)?)
}

/// Settings for a law-of-large-numbers verification run.
#[derive(Debug, Clone)]
pub struct LlnConfig {
    pub mode: SimMode,
    /// Steps per replication.
    pub steps: usize,
    pub reps: usize,
    pub seed: u64,
    /// Euler step in months (continuous mode only).
    pub h: f64,
    /// Absolute slack added to the 4-sigma band.
    pub atol: f64,
}

impl Default for LlnConfig {
    fn default() -> Self {
        Self { mode: SimMode::Discrete, steps: 1_000_000, reps: 8, seed: 1, h: 1.0, atol: 1e-9 }
    }
}

/// Result of comparing simulated time averages with the closed-form
/// stationary oracle.
#[derive(Debug, Clone, Serialize)]
pub struct LlnReport {
    /// (step count, running mean per component), averaged over
    /// replications, on a geometric checkpoint grid.
    pub running_mean: Vec<(f64, Vec<f64>)>,
    pub oracle_mean: Vec<f64>,
    pub estimate: Vec<f64>,
    pub final_abs_error: Vec<f64>,
    pub mc_stderr: Vec<f64>,
    /// Time average of |X|^2 per replication mean (continuous LLN class).
    pub sq_norm_avg: f64,
    pub passed: bool,
    pub atol: f64,
}

fn checkpoint_grid(steps: usize, points: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = (0..points)
        .map(|j| {
            let f = (steps as f64).powf(j as f64 / (points - 1) as f64);
            f.round().max(1.0) as usize
        })
        .collect();
    grid.dedup();
    if *grid.last().unwrap() != steps {
        grid.push(steps);
    }
    grid
}

struct RepOutcome {
    sums_at_checkpoints: Vec<Vec<f64>>,
    final_mean: Vec<f64>,
    sq_norm_avg: f64,
}

/// Runs `reps` independent paths and compares time-averaged X against
/// the stationary oracle. Passed means every component error is inside
/// 4 Monte Carlo standard errors plus the absolute slack.
pub fn verify_lln(model: &ArSvModel, cfg: &LlnConfig) -> Result<LlnReport, SimError> {
    require_stable(model)?;
    if cfg.mode == SimMode::Continuous {
        // the mapped drift must also sit in the right half plane
        stationary_mean_continuous(model)?;
    }
    let d = model.dim();
    let oracle_mean = match cfg.mode {
        SimMode::Discrete => stationary_mean_discrete(model)?,
        SimMode::Continuous => stationary_mean_continuous(model)?,
    };
    let grid = checkpoint_grid(cfg.steps, 200);

    let outcomes: Vec<Result<RepOutcome, SimError>> = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|rep| {
            let seed = SeedRecord { seed: cfg.seed, replication: rep };
            let path = match cfg.mode {
                SimMode::Discrete => simulate_discrete_stream(model, cfg.steps, seed, None)?,
                SimMode::Continuous => simulate_continuous_stream(model, cfg.steps, cfg.h, seed, None)?,
            };
            let mut sums_at_checkpoints = Vec::with_capacity(grid.len());
            let mut acc = vec![0.0; d];
            let mut gi = 0;
            for t in 1..=cfg.steps {
                for (j, a) in acc.iter_mut().enumerate() {
                    *a += path.x[(t, j)];
                }
                if gi < grid.len() && t == grid[gi] {
                    sums_at_checkpoints.push(acc.clone());
                    gi += 1;
                }
            }
            let final_mean: Vec<f64> = acc.iter().map(|s| s / cfg.steps as f64).collect();
            Ok(RepOutcome { sums_at_checkpoints, final_mean, sq_norm_avg: path.time_average_sq_norm() })
        })
        .collect();

    let mut reps_data = Vec::with_capacity(cfg.reps);
    for o in outcomes {
        reps_data.push(o?);
    }

    // deterministic merge ordered by replication index
    let mut running_mean = Vec::with_capacity(grid.len());
    for (gi, &n) in grid.iter().enumerate() {
        let mut m = vec![0.0; d];
        for rep in &reps_data {
            for (j, mj) in m.iter_mut().enumerate() {
                *mj += rep.sums_at_checkpoints[gi][j] / n as f64;
            }
        }
        m.iter_mut().for_each(|x| *x /= cfg.reps as f64);
        running_mean.push((n as f64, m));
    }

    let estimate: Vec<f64> = (0..d)
        .map(|j| reps_data.iter().map(|r| r.final_mean[j]).sum::<f64>() / cfg.reps as f64)
        .collect();
    let mc_stderr: Vec<f64> = (0..d)
        .map(|j| {
            let vals: Vec<f64> = reps_data.iter().map(|r| r.final_mean[j]).collect();
            (linalg::variance(&vals, 1) / cfg.reps as f64).sqrt()
        })
        .collect();
    let final_abs_error: Vec<f64> =
        estimate.iter().zip(&oracle_mean).map(|(e, o)| (e - o).abs()).collect();
    let passed = final_abs_error
        .iter()
        .zip(&mc_stderr)
        .all(|(err, se)| *err < 4.0 * se + cfg.atol);
    let sq_norm_avg =
        reps_data.iter().map(|r| r.sq_norm_avg).sum::<f64>() / cfg.reps as f64;

    Ok(LlnReport {
        running_mean,
        oracle_mean,
        estimate,
        final_abs_error,
        mc_stderr,
        sq_norm_avg,
        passed,
        atol: cfg.atol,
    })
}

/// Writes a path as delimited text: time, v, x_1..x_d.
pub fn write_path(path: &SimPath, out: &mut dyn std::io::Write) -> std::io::Result<()> {
    let d = path.x.cols();
    let header: Vec<String> = ["time".to_string(), "v".to_string()]
        .into_iter()
        .chain((1..=d).map(|i| format!("x{i}")))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for t in 0..path.len() {
        let mut fields = vec![format!("{}", path.times[t]), format!("{}", path.v[t])];
        for j in 0..d {
            fields.push(format!("{}", path.x[(t, j)]));
        }
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}
