//! Thin-plate spline smoothing in the plane.
//!
//! The smoother is `g(t) = a0 + a1 x + a2 y + sum_i b_i e(t - t_i)` with the
//! kernel `e(h) = |h|^2 log(|h|^2) / 16 pi`. The coefficients solve the
//! bordered system
//!
//! ```text
//! | K + n*alpha*I  X | |b|   |Z|
//! | X'             0 | |a| = |0|
//! ```
//!
//! where `K_ij = e(t_i - t_j)` and `X` has rows `(1, x_i, y_i)`. `alpha = 0`
//! interpolates; `alpha -> inf` recovers the least-squares plane. The same
//! system is the dual kriging system with the kernel-plus-ridge treated as a
//! generalized covariance, which is what [`tps_system`] exposes.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{Observations, Site};
use crate::kriging::{assemble_system, Covariance, DriftBasis, KrigingSystem};
use crate::linalg::{bordered_matrix, has_full_column_rank, DenseSolver};

/// Thin-plate spline kernel `e(h) = h^2 log(h^2) / 16 pi`, zero at the origin.
pub fn tps_kernel(h: f64) -> f64 {
    debug_assert!(h >= 0.0);
    if h == 0.0 {
        return 0.0;
    }
    let h2 = h * h;
    h2 * h2.ln() / (16.0 * std::f64::consts::PI)
}

/// The thin-plate kernel plus smoothing ridge viewed as a generalized
/// covariance: diagonal `n*alpha`, off-diagonal `e(h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TpsGeneralizedCovariance {
    n_alpha: f64,
}

impl TpsGeneralizedCovariance {
    pub fn new(n: usize, alpha: f64) -> Self {
        Self {
            n_alpha: n as f64 * alpha,
        }
    }

    pub fn n_alpha(&self) -> f64 {
        self.n_alpha
    }
}

impl Covariance for TpsGeneralizedCovariance {
    fn at_zero(&self) -> f64 {
        self.n_alpha
    }

    fn at(&self, h: f64) -> f64 {
        tps_kernel(h)
    }
}

/// The spline system expressed through the kriging machinery: covariance
/// matrix `K + n*alpha*I`, linear drift. Its dual solve returns `(b, a)` and
/// its bordered prediction provides the smoothing-spline analogue of the
/// kriging variance.
pub fn tps_system(
    obs: &Observations,
    alpha: f64,
) -> Result<KrigingSystem<TpsGeneralizedCovariance>> {
    validate_tps_inputs(obs, alpha)?;
    assemble_system(
        obs,
        TpsGeneralizedCovariance::new(obs.len(), alpha),
        DriftBasis::Linear,
    )
    .map_err(|e| match e {
        Error::RankDeficientDrift => Error::CollinearSites,
        other => other,
    })
}

fn validate_tps_inputs(obs: &Observations, alpha: f64) -> Result<()> {
    if obs.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "thin-plate spline needs at least 3 sites, got {}",
            obs.len()
        )));
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha must be finite and nonnegative, got {alpha}"
        )));
    }
    Ok(())
}

/// A fitted degree-2 thin-plate spline.
#[derive(Debug, Clone)]
pub struct TpsFit {
    obs: Observations,
    alpha: f64,
    a: [f64; 3],
    b: DVector<f64>,
    kernel: DMatrix<f64>,
}

/// Internal factorized spline system; shared by the fit and the GCV sweep.
struct TpsSolver {
    solver: DenseSolver,
    kernel: DMatrix<f64>,
    n: usize,
}

impl TpsSolver {
    fn new(obs: &Observations, alpha: f64) -> Result<Self> {
        let n = obs.len();
        let design = DMatrix::from_fn(n, 3, |i, j| match j {
            0 => 1.0,
            1 => obs.site(i).x(),
            _ => obs.site(i).y(),
        });
        if !has_full_column_rank(&design) {
            return Err(Error::CollinearSites);
        }
        let kernel = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else {
                tps_kernel(obs.site(i).distance_to(obs.site(j)))
            }
        });
        let mut k_alpha = kernel.clone();
        let ridge = n as f64 * alpha;
        for i in 0..n {
            k_alpha[(i, i)] += ridge;
        }
        let solver = DenseSolver::new(bordered_matrix(&k_alpha, &design))?;
        Ok(Self { solver, kernel, n })
    }

    /// Solves for (b, a) given data values in the top block.
    fn solve(&self, top: &[f64]) -> (DVector<f64>, [f64; 3]) {
        let mut rhs = DVector::zeros(self.n + 3);
        for (i, &v) in top.iter().enumerate() {
            rhs[i] = v;
        }
        let sol = self.solver.solve(&rhs);
        let b = sol.rows(0, self.n).into_owned();
        let a = [sol[self.n], sol[self.n + 1], sol[self.n + 2]];
        (b, a)
    }
}

/// Fits the smoothing spline for a fixed smoothing parameter.
pub fn fit_tps(obs: &Observations, alpha: f64) -> Result<TpsFit> {
    validate_tps_inputs(obs, alpha)?;
    let solver = TpsSolver::new(obs, alpha)?;
    let (b, a) = solver.solve(obs.values());
    Ok(TpsFit {
        obs: obs.clone(),
        alpha,
        a,
        b,
        kernel: solver.kernel,
    })
}

impl TpsFit {
    pub fn observations(&self) -> &Observations {
        &self.obs
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Polynomial coefficients `(a0, a1, a2)`.
    pub fn a(&self) -> [f64; 3] {
        self.a
    }

    /// Kernel coefficients `b`.
    pub fn b(&self) -> &[f64] {
        self.b.as_slice()
    }

    /// Evaluates the spline at a site; O(n).
    pub fn predict(&self, t0: &Site) -> f64 {
        let mut acc = self.a[0] + self.a[1] * t0.x() + self.a[2] * t0.y();
        for i in 0..self.obs.len() {
            acc += self.b[i] * tps_kernel(self.obs.site(i).distance_to(t0));
        }
        acc
    }

    /// Fitted values at the data sites (`K b + X a`).
    pub fn fitted_values(&self) -> Vec<f64> {
        (0..self.obs.len())
            .map(|i| self.predict(self.obs.site(i)))
            .collect()
    }

    /// Roughness penalty `b' K b`, clamped at zero against round-off.
    /// Zero exactly when the fit is an affine plane.
    pub fn roughness(&self) -> f64 {
        let kb = &self.kernel * &self.b;
        self.b.dot(&kb).max(0.0)
    }
}

/// Result of a smoothing-parameter search: the chosen value, the candidate
/// grid, and the GCV score per candidate (`None` when a candidate failed to
/// factorize).
#[derive(Debug, Clone)]
pub struct AlphaSelection {
    pub alpha: f64,
    pub grid: Vec<f64>,
    pub scores: Vec<Option<f64>>,
}

/// Default candidate grid: 40 points log-spaced over `[1e-6 s, 1e4 s]` where
/// `s` is the sample variance of the values.
pub fn default_alpha_grid(obs: &Observations) -> Vec<f64> {
    let n = obs.len() as f64;
    let mean: f64 = obs.values().iter().sum::<f64>() / n;
    let var: f64 = obs
        .values()
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / n;
    let s = if var > f64::MIN_POSITIVE { var } else { 1.0 };
    let lo = 1e-6 * s;
    let hi = 1e4 * s;
    let count = 40;
    (0..count)
        .map(|k| lo * (hi / lo).powf(k as f64 / (count - 1) as f64))
        .collect()
}

/// Chooses the smoothing parameter by generalized cross-validation:
/// `GCV(alpha) = n ||(I - A) Z||^2 / tr(I - A)^2` where `A` maps data to
/// fitted values. The trace is computed exactly from n unit-vector solves.
/// Ties within 1e-12 of the best score resolve to the smallest alpha.
pub fn select_alpha_gcv(obs: &Observations, grid: Option<Vec<f64>>) -> Result<AlphaSelection> {
    if obs.len() < 5 {
        return Err(Error::InvalidParameter(format!(
            "GCV selection needs at least 5 observations, got {}",
            obs.len()
        )));
    }
    let grid = match grid {
        Some(g) => {
            if g.is_empty() {
                return Err(Error::InvalidParameter("empty alpha grid".into()));
            }
            if g.iter().any(|&a| !(a.is_finite() && a > 0.0)) {
                return Err(Error::InvalidParameter(
                    "alpha grid entries must be positive and finite".into(),
                ));
            }
            g
        }
        None => default_alpha_grid(obs),
    };

    let n = obs.len();
    let mut scores: Vec<Option<f64>> = Vec::with_capacity(grid.len());
    for &alpha in &grid {
        scores.push(gcv_score(obs, alpha).ok());
    }
    let _ = n;

    let mut best_score = f64::INFINITY;
    for s in scores.iter().flatten() {
        best_score = best_score.min(*s);
    }
    if !best_score.is_finite() {
        return Err(Error::InvalidParameter(
            "every candidate alpha failed to factorize or score".into(),
        ));
    }
    let mut alpha = f64::INFINITY;
    for (k, s) in scores.iter().enumerate() {
        if let Some(s) = s {
            if *s <= best_score + 1e-12 && grid[k] < alpha {
                alpha = grid[k];
            }
        }
    }
    Ok(AlphaSelection {
        alpha,
        grid,
        scores,
    })
}

fn gcv_score(obs: &Observations, alpha: f64) -> Result<f64> {
    let solver = TpsSolver::new(obs, alpha)?;
    let n = obs.len();
    let ridge = n as f64 * alpha;

    // Fitted values satisfy g_i = Z_i - n*alpha*b_i.
    let (b, _) = solver.solve(obs.values());
    let rss: f64 = b.iter().map(|&bi| (ridge * bi) * (ridge * bi)).sum();

    // tr(I - A) = n*alpha * sum_i (top-left block of the inverse)_ii,
    // computed from unit-vector solves.
    let mut trace_im_a = 0.0;
    let mut unit = vec![0.0f64; n];
    for i in 0..n {
        unit[i] = 1.0;
        let (bi, _) = solver.solve(&unit);
        trace_im_a += ridge * bi[i];
        unit[i] = 0.0;
    }
    let denom = trace_im_a * trace_im_a;
    if denom.is_nan() || denom <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "degenerate GCV denominator at alpha = {alpha}"
        )));
    }
    Ok(n as f64 * rss / denom)
}
