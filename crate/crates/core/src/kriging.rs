//! Universal and ordinary kriging: primal weights with prediction variance,
//! and the dual (coefficient-space) form for fast repeated prediction.
//!
//! For observations `Z` at sites `t_1..t_n`, drift design matrix `X`
//! (`n x (p+1)`) and covariance matrix `Sigma` with entries `c(t_i - t_j)`,
//! the primal weights at a target `t_0` are
//!
//! ```text
//! lambda' = [C + X (X' Sigma^-1 X)^-1 (x - X' Sigma^-1 C)]' Sigma^-1
//! ```
//!
//! with `C_i = c(t_0 - t_i)` and `x` the drift basis at `t_0`, subject to the
//! unbiasedness constraint `X' lambda = x`. The prediction variance is
//!
//! ```text
//! sigma^2(t_0) = c(0) - C' Sigma^-1 C
//!              + (x - X' Sigma^-1 C)' (X' Sigma^-1 X)^-1 (x - X' Sigma^-1 C)
//! ```
//!
//! The dual form solves the bordered system
//!
//! ```text
//! | Sigma  X | |V1|   |Z|
//! | X'     0 | |V2| = |0|
//! ```
//!
//! once, after which a prediction is the O(n) sum `V1'C + V2'x`.
//!
//! The covariance is abstracted behind [`Covariance`] so the same machinery
//! runs with a proper covariogram or with a generalized covariance such as
//! the thin-plate spline kernel plus ridge.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{Observations, Site};
use crate::linalg::{bordered_matrix, has_full_column_rank, DenseSolver};
use crate::variogram::GaussianCovariogram;

/// Stationary or generalized covariance function of the separation distance.
pub trait Covariance {
    /// Diagonal value `c(0)`, including any nugget or ridge term. Also the
    /// leading term of the prediction variance.
    fn at_zero(&self) -> f64;

    /// Covariance at separation `h`. The value at `h == 0` is the limit used
    /// for a prediction site coinciding with a data site; for a covariogram
    /// with nugget this equals `at_zero`, for a smoothing kernel it does not.
    fn at(&self, h: f64) -> f64;
}

impl Covariance for GaussianCovariogram {
    fn at_zero(&self) -> f64 {
        self.sill()
    }

    fn at(&self, h: f64) -> f64 {
        self.covariogram(h)
    }
}

/// Drift (trend) basis of the kriging mean model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftBasis {
    /// Constant mean: `f_0(t) = 1` (ordinary kriging, `p = 0`).
    Constant,
    /// Affine mean: `f = (1, x, y)` (universal kriging, `p = 2`).
    Linear,
}

impl DriftBasis {
    pub fn from_degree(degree: u8) -> Result<Self> {
        match degree {
            0 => Ok(Self::Constant),
            1 => Ok(Self::Linear),
            d => Err(Error::InvalidParameter(format!(
                "drift degree must be 0 or 1, got {d}"
            ))),
        }
    }

    pub fn degree(&self) -> u8 {
        match self {
            Self::Constant => 0,
            Self::Linear => 1,
        }
    }

    /// Number of non-constant basis functions.
    pub fn p(&self) -> usize {
        match self {
            Self::Constant => 0,
            Self::Linear => 2,
        }
    }

    /// Total number of basis functions (`p + 1`).
    pub fn len(&self) -> usize {
        self.p() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Basis functions evaluated at a site.
    pub fn eval(&self, s: &Site) -> Vec<f64> {
        match self {
            Self::Constant => vec![1.0],
            Self::Linear => vec![1.0, s.x(), s.y()],
        }
    }

    fn design_matrix(&self, obs: &Observations) -> DMatrix<f64> {
        let n = obs.len();
        let m = self.len();
        DMatrix::from_fn(n, m, |i, j| self.eval(obs.site(i))[j])
    }
}

/// Primal-path operators: factorization of `Sigma` itself plus the small
/// normal matrix `X' Sigma^-1 X`. Unavailable when `Sigma` alone is too
/// ill-conditioned, which can happen for generalized covariances even though
/// the bordered system is perfectly solvable.
#[derive(Debug, Clone)]
struct PrimalOperator {
    sigma_solver: DenseSolver,
    sigma_inv_x: DMatrix<f64>,
    normal_solver: DenseSolver,
}

/// Assembled kriging system: matrices, factorizations, and the inputs they
/// were built from. Immutable; concurrent prediction from one system is safe.
#[derive(Debug, Clone)]
pub struct KrigingSystem<C: Covariance> {
    obs: Observations,
    cov: C,
    basis: DriftBasis,
    sigma: DMatrix<f64>,
    design: DMatrix<f64>,
    bordered: DenseSolver,
    primal: Option<PrimalOperator>,
}

/// Assembles covariance and design matrices and factorizes the bordered
/// system, gating on its reciprocal condition estimate.
pub fn assemble_system<C: Covariance>(
    obs: &Observations,
    cov: C,
    basis: DriftBasis,
) -> Result<KrigingSystem<C>> {
    let n = obs.len();
    if n < basis.len() {
        return Err(Error::InvalidParameter(format!(
            "{n} observations cannot identify {} drift coefficients",
            basis.len()
        )));
    }
    let design = basis.design_matrix(obs);
    if !has_full_column_rank(&design) {
        return Err(Error::RankDeficientDrift);
    }
    let sigma = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            cov.at_zero()
        } else {
            cov.at(obs.site(i).distance_to(obs.site(j)))
        }
    });
    let bordered = DenseSolver::new(bordered_matrix(&sigma, &design))?;

    let primal = build_primal(&sigma, &design).ok();

    Ok(KrigingSystem {
        obs: obs.clone(),
        cov,
        basis,
        sigma,
        design,
        bordered,
        primal,
    })
}

fn build_primal(sigma: &DMatrix<f64>, design: &DMatrix<f64>) -> Result<PrimalOperator> {
    let sigma_solver = DenseSolver::new(sigma.clone())?;
    let sigma_inv_x = sigma_solver.solve_matrix(design);
    let normal = design.transpose() * &sigma_inv_x;
    let normal_solver = DenseSolver::new(normal)?;
    Ok(PrimalOperator {
        sigma_solver,
        sigma_inv_x,
        normal_solver,
    })
}

/// A primal kriging prediction: value, variance, weights, and the Lagrange
/// multipliers enforcing the unbiasedness constraint.
#[derive(Debug, Clone)]
pub struct KrigingPrediction {
    pub value: f64,
    pub variance: f64,
    pub weights: Vec<f64>,
    pub lagrange: Vec<f64>,
}

impl<C: Covariance> KrigingSystem<C> {
    pub fn observations(&self) -> &Observations {
        &self.obs
    }

    pub fn covariance(&self) -> &C {
        &self.cov
    }

    pub fn basis(&self) -> DriftBasis {
        self.basis
    }

    /// Covariance matrix `Sigma` with entries `c(t_i - t_j)`.
    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Drift design matrix `X` (`n x (p+1)`).
    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    /// Reciprocal condition estimate of the bordered matrix.
    pub fn rcond(&self) -> f64 {
        self.bordered.rcond()
    }

    fn covariance_vector(&self, t0: &Site) -> DVector<f64> {
        DVector::from_fn(self.obs.len(), |i, _| {
            self.cov.at(self.obs.site(i).distance_to(t0))
        })
    }

    /// Primal prediction via `Sigma^-1` (weights, variance, multipliers).
    ///
    /// Fails with [`Error::IllConditioned`] when the covariance matrix alone
    /// could not be factorized at assembly time.
    pub fn predict_primal(&self, t0: &Site) -> Result<KrigingPrediction> {
        let primal = self.primal.as_ref().ok_or(Error::IllConditioned {
            rcond: 0.0,
        })?;
        let n = self.obs.len();
        let c = self.covariance_vector(t0);
        let x0 = DVector::from_vec(self.basis.eval(t0));

        let u = primal.sigma_solver.solve(&c); // Sigma^-1 C
        let d = &x0 - self.design.transpose() * &u; // x - X' Sigma^-1 C
        let m = primal.normal_solver.solve(&d); // (X' Sigma^-1 X)^-1 d
        let lambda = &u + &primal.sigma_inv_x * &m;

        let mut value = 0.0;
        for i in 0..n {
            value += lambda[i] * self.obs.value(i);
        }
        let variance = (self.cov.at_zero() - c.dot(&u) + d.dot(&m)).max(0.0);
        Ok(KrigingPrediction {
            value,
            variance,
            weights: lambda.as_slice().to_vec(),
            lagrange: m.as_slice().to_vec(),
        })
    }

    /// Prediction and variance from one solve of the bordered system with
    /// right-hand side `[C; x]`. Algebraically equal to the primal path but
    /// does not require `Sigma` to be invertible on its own, so it also
    /// serves generalized covariances.
    pub fn predict_bordered(&self, t0: &Site) -> KrigingPrediction {
        let n = self.obs.len();
        let m = self.basis.len();
        let c = self.covariance_vector(t0);
        let x0 = DVector::from_vec(self.basis.eval(t0));
        let mut rhs = DVector::zeros(n + m);
        rhs.rows_mut(0, n).copy_from(&c);
        rhs.rows_mut(n, m).copy_from(&x0);
        let sol = self.bordered.solve(&rhs);
        let lambda = sol.rows(0, n).into_owned();
        let nu = sol.rows(n, m).into_owned(); // nu = -m in the primal notation

        let mut value = 0.0;
        for i in 0..n {
            value += lambda[i] * self.obs.value(i);
        }
        let variance = (self.cov.at_zero() - c.dot(&lambda) - x0.dot(&nu)).max(0.0);
        KrigingPrediction {
            value,
            variance,
            weights: lambda.as_slice().to_vec(),
            lagrange: nu.iter().map(|v| -v).collect(),
        }
    }

    /// Solves the dual system once; predictions are then O(n) per site.
    pub fn fit_dual(&self) -> DualKrigingFit<'_, C> {
        let n = self.obs.len();
        let m = self.basis.len();
        let mut rhs = DVector::zeros(n + m);
        for i in 0..n {
            rhs[i] = self.obs.value(i);
        }
        let sol = self.bordered.solve(&rhs);
        DualKrigingFit {
            system: self,
            v1: sol.rows(0, n).into_owned(),
            v2: sol.rows(n, m).into_owned(),
        }
    }
}

/// Solved dual kriging coefficients `(V1, V2)` satisfying
/// `Sigma V1 + X V2 = Z` and `X' V1 = 0`.
#[derive(Debug, Clone)]
pub struct DualKrigingFit<'a, C: Covariance> {
    system: &'a KrigingSystem<C>,
    v1: DVector<f64>,
    v2: DVector<f64>,
}

impl<C: Covariance> DualKrigingFit<'_, C> {
    pub fn system(&self) -> &KrigingSystem<C> {
        self.system
    }

    pub fn v1(&self) -> &[f64] {
        self.v1.as_slice()
    }

    pub fn v2(&self) -> &[f64] {
        self.v2.as_slice()
    }

    /// Dual prediction `V1'C + V2'x`.
    pub fn predict(&self, t0: &Site) -> f64 {
        let obs = &self.system.obs;
        let mut acc = 0.0;
        for i in 0..obs.len() {
            acc += self.v1[i] * self.system.cov.at(obs.site(i).distance_to(t0));
        }
        for (k, f) in self.system.basis.eval(t0).iter().enumerate() {
            acc += self.v2[k] * f;
        }
        acc
    }
}
