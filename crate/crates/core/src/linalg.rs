//! Dense linear algebra shared by the kriging, spline, and simulation modules.
//!
//! All systems here are small (a few hundred unknowns) and symmetric, so a
//! pivoted LU on an equilibrated copy of the matrix is used throughout. The
//! bordered saddle-point matrices that kriging and splines produce have wildly
//! different block scales (covariance block vs. unit drift columns), which
//! makes the raw 1-norm condition number meaningless; Ruiz equilibration
//! balances the blocks before factorization and conditioning is assessed on
//! the balanced matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Reciprocal-condition gate: systems below this are reported as ill-conditioned.
pub const RCOND_MIN: f64 = 1e-14;

/// Pivoted LU factorization of a symmetrically equilibrated matrix, with a
/// 1-norm reciprocal-condition estimate.
#[derive(Debug, Clone)]
pub struct DenseSolver {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    scale: DVector<f64>,
    rcond: f64,
    dim: usize,
}

impl DenseSolver {
    /// Factorizes a symmetric matrix; fails with [`Error::IllConditioned`]
    /// when the reciprocal condition estimate is below [`RCOND_MIN`].
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "matrix must be square");
        let scale = ruiz_scale(&a);
        let mut scaled = a;
        for i in 0..n {
            for j in 0..n {
                scaled[(i, j)] *= scale[i] * scale[j];
            }
        }
        let norm1 = one_norm(&scaled);
        let lu = scaled.lu();
        let inv_norm = estimate_inverse_one_norm(&lu, n);
        let rcond = match inv_norm {
            Some(est) if est > 0.0 && norm1 > 0.0 => 1.0 / (norm1 * est),
            _ => 0.0,
        };
        if rcond < RCOND_MIN {
            return Err(Error::IllConditioned { rcond });
        }
        Ok(Self {
            lu,
            scale,
            rcond,
            dim: n,
        })
    }

    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    /// Solves `A x = b` for the original (unequilibrated) matrix.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let scaled_b = DVector::from_fn(self.dim, |i, _| b[i] * self.scale[i]);
        let z = self
            .lu
            .solve(&scaled_b)
            .expect("factorization validated at construction");
        DVector::from_fn(self.dim, |i, _| z[i] * self.scale[i])
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim, b.ncols());
        for j in 0..b.ncols() {
            let col = self.solve(&DVector::from_column_slice(b.column(j).as_slice()));
            out.set_column(j, &col);
        }
        out
    }
}

/// Iterated row/column inf-norm equilibration (Ruiz). Returns the diagonal
/// scale `d` such that `diag(d) * A * diag(d)` has rows and columns of
/// roughly unit max magnitude. Symmetric input gives a symmetric scaling.
fn ruiz_scale(a: &DMatrix<f64>) -> DVector<f64> {
    let n = a.nrows();
    let mut d = DVector::from_element(n, 1.0);
    for _ in 0..20 {
        let mut worst: f64 = 0.0;
        let mut row_max = vec![0.0f64; n];
        for i in 0..n {
            for j in 0..n {
                let v = (a[(i, j)] * d[i] * d[j]).abs();
                if v > row_max[i] {
                    row_max[i] = v;
                }
            }
        }
        for i in 0..n {
            if row_max[i] > 0.0 {
                worst = worst.max((row_max[i].ln()).abs());
                d[i] /= row_max[i].sqrt();
            }
        }
        // Converged when every row max is within a factor ~2 of 1.
        if worst < std::f64::consts::LN_2 {
            break;
        }
    }
    d
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    let mut best: f64 = 0.0;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|v| v.abs()).sum();
        best = best.max(s);
    }
    best
}

/// Hager-style estimate of the 1-norm of the inverse. The matrices here are
/// symmetric, so solves with the transpose reuse the same factorization.
fn estimate_inverse_one_norm(
    lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
) -> Option<f64> {
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut est = 0.0f64;
    for _ in 0..5 {
        let z = lu.solve(&x)?;
        let z_norm: f64 = z.iter().map(|v| v.abs()).sum();
        est = est.max(z_norm);
        let xi = DVector::from_fn(n, |i, _| if z[i] >= 0.0 { 1.0 } else { -1.0 });
        let w = lu.solve(&xi)?;
        let (mut j_best, mut w_best) = (0usize, 0.0f64);
        for (j, &wj) in w.iter().enumerate() {
            if wj.abs() > w_best {
                w_best = wj.abs();
                j_best = j;
            }
        }
        if w_best <= w.dot(&x) {
            break;
        }
        x = DVector::zeros(n);
        x[j_best] = 1.0;
    }
    Some(est)
}

/// Assembles the bordered saddle-point matrix `[[A, X], [X', 0]]`.
pub fn bordered_matrix(a: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let m = x.ncols();
    assert_eq!(x.nrows(), n);
    let mut b = DMatrix::zeros(n + m, n + m);
    b.view_mut((0, 0), (n, n)).copy_from(a);
    b.view_mut((0, n), (n, m)).copy_from(x);
    b.view_mut((n, 0), (m, n)).copy_from(&x.transpose());
    b
}

/// True when the matrix has full column rank (SVD-based check).
pub fn has_full_column_rank(x: &DMatrix<f64>) -> bool {
    let m = x.ncols().min(x.nrows());
    if x.ncols() > x.nrows() {
        return false;
    }
    let svd = x.clone().svd(false, false);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    if max_sv == 0.0 {
        return false;
    }
    let tol = max_sv * (x.nrows().max(x.ncols()) as f64) * f64::EPSILON * 16.0;
    svd.singular_values.iter().filter(|&&s| s > tol).count() == m
}

/// Symmetric square root `S` of a symmetric positive semidefinite matrix
/// (`S * S = A`). Eigenvalues in `[-budget, 0)` are clamped to zero; a more
/// negative eigenvalue is an error.
pub fn symmetric_sqrt(a: &DMatrix<f64>, budget: f64) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let eig = a.clone().symmetric_eigen();
    let mut min_ev = f64::INFINITY;
    for &ev in eig.eigenvalues.iter() {
        min_ev = min_ev.min(ev);
    }
    if min_ev < -budget {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: min_ev,
        });
    }
    let sqrt_vals = DVector::from_fn(n, |i, _| eig.eigenvalues[i].max(0.0).sqrt());
    let mut scaled = eig.eigenvectors.clone();
    for j in 0..n {
        let s = sqrt_vals[j];
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    Ok(&scaled * eig.eigenvectors.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solves_small_symmetric_system() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let solver = DenseSolver::new(a.clone()).unwrap();
        let b = DVector::from_column_slice(&[1.0, -2.0, 3.0]);
        let x = solver.solve(&b);
        let r = &a * &x - &b;
        assert!(r.amax() < 1e-12);
        assert!(solver.rcond() > 1e-4);
    }

    #[test]
    fn rejects_singular_matrix() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            DenseSolver::new(a),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn equilibration_handles_block_scale_mismatch() {
        // Saddle matrix with a huge diagonal block and unit borders; the raw
        // 1-norm condition is ~1e26 but the system is perfectly solvable.
        let kappa = 1e13;
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[kappa, 0.0, 1.0, 0.0, kappa, 2.0, 1.0, 2.0, 0.0],
        );
        let solver = DenseSolver::new(a.clone()).unwrap();
        let b = DVector::from_column_slice(&[3.0, 5.0, 0.25]);
        let x = solver.solve(&b);
        let r = &a * &x - &b;
        assert!(r.amax() < 1e-9 * b.amax().max(kappa * x.amax() * 1e-15));
    }

    #[test]
    fn bordered_layout() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]);
        let x = DMatrix::from_row_slice(2, 1, &[5.0, 6.0]);
        let b = bordered_matrix(&a, &x);
        assert_eq!(b.nrows(), 3);
        assert_eq!(b[(0, 2)], 5.0);
        assert_eq!(b[(2, 1)], 6.0);
        assert_eq!(b[(2, 2)], 0.0);
    }

    #[test]
    fn rank_check_detects_collinear_design() {
        // (1, x, y) on a line has rank 2.
        let x = DMatrix::from_row_slice(
            4,
            3,
            &[
                1.0, 0.0, 0.0, //
                1.0, 1.0, 1.0, //
                1.0, 2.0, 2.0, //
                1.0, 3.0, 3.0,
            ],
        );
        assert!(!has_full_column_rank(&x));
        let x2 = DMatrix::from_row_slice(
            4,
            3,
            &[
                1.0, 0.0, 0.0, //
                1.0, 1.0, 0.0, //
                1.0, 0.0, 1.0, //
                1.0, 1.0, 1.0,
            ],
        );
        assert!(has_full_column_rank(&x2));
    }

    #[test]
    fn symmetric_sqrt_squares_back() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let s = symmetric_sqrt(&a, 0.0).unwrap();
        let back = &s * &s;
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(back[(i, j)], a[(i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn symmetric_sqrt_rejects_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            symmetric_sqrt(&a, 1e-10),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }
}
