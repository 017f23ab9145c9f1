//! Dense linear algebra kernels sized for this problem class.
//!
//! Everything here assumes tall-and-skinny shapes: up to ~10^5 rows but no
//! more than a couple dozen columns. The SVD is a one-sided Jacobi
//! orthogonalization, chosen because at these widths it is simple, fully
//! deterministic (fixed pivot order, no branching heuristics), and accurate
//! enough that the factor invariants hold to 1e-10 without iteration
//! refinement.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_traits::Float;

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds from row-major data; `data.len()` must equal `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix data length does not match rows * cols",
            });
        }
        Ok(Matrix { rows, cols, data })
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

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Euclidean norm of column `j`.
    pub fn col_norm(&self, j: usize) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.rows {
            let v = self.data[i * self.cols + j];
            acc += v * v;
        }
        Float::sqrt(acc)
    }

    /// Multiplies column `j` by `s` in place.
    pub fn scale_col(&mut self, j: usize, s: f64) {
        for i in 0..self.rows {
            self.data[i * self.cols + j] *= s;
        }
    }

    /// `A * x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            out.push(acc);
        }
        out
    }

    /// `A^T * x` without forming the transpose.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    /// `A * B`.
    pub fn matmul(&self, b: &Matrix) -> Result<Matrix> {
        if self.cols != b.rows {
            return Err(Error::DimensionMismatch {
                context: "inner dimensions differ in matmul",
            });
        }
        let mut out = Matrix::zeros(self.rows, b.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.data[i * self.cols + k];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..b.cols {
                    out.data[i * b.cols + j] += aik * b.data[k * b.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn frob_norm(&self) -> f64 {
        let mut acc = 0.0;
        for v in &self.data {
            acc += v * v;
        }
        Float::sqrt(acc)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Euclidean norm of a vector.
pub fn norm2(x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for v in x {
        acc += v * v;
    }
    Float::sqrt(acc)
}

/// Infinity norm of a vector.
pub fn norm_inf(x: &[f64]) -> f64 {
    let mut m = 0.0f64;
    for v in x {
        m = m.max(v.abs());
    }
    m
}

/// Thin SVD `A = U * diag(sigma) * V^T` with `U` of the same shape as `A`.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    /// `rows x cols`, orthonormal columns (zero columns where `sigma` is 0).
    pub u: Matrix,
    /// Singular values, descending.
    pub sigma: Vec<f64>,
    /// `cols x cols`, orthogonal.
    pub v: Matrix,
}

/// Singular values at or below this fraction of the largest are treated as
/// zero by every consumer that must decide rank (machine epsilon ^ 2/3).
pub fn rank_threshold(sigma_max: f64) -> f64 {
    Float::powf(f64::EPSILON, 2.0 / 3.0) * sigma_max
}

const JACOBI_MAX_SWEEPS: usize = 64;
/// A column pair counts as orthogonal once their inner product is this small
/// relative to the product of their norms.
const JACOBI_TOL: f64 = 1e-15;

/// One-sided Jacobi SVD of a `rows x cols` matrix with `rows >= cols`.
///
/// Rotates column pairs in a fixed sweep order until all pairs are mutually
/// orthogonal, which makes the result deterministic down to the last bit for
/// identical input. Cost is `O(cols^2 * rows)` per sweep; for the widths this
/// crate targets, a handful of sweeps suffice.
pub fn svd(a: &Matrix) -> Result<ThinSvd> {
    let (rows, cols) = (a.rows, a.cols);
    if rows < cols {
        return Err(Error::DimensionMismatch {
            context: "svd requires at least as many rows as columns",
        });
    }

    let mut u = a.clone();
    let mut v = Matrix::identity(cols);
    let mut settled = false;

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols.saturating_sub(1) {
            for q in (p + 1)..cols {
                // Column moments: app = |cp|^2, aqq = |cq|^2, apq = cp . cq.
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..rows {
                    let up = u.data[i * cols + p];
                    let uq = u.data[i * cols + q];
                    app += up * up;
                    aqq += uq * uq;
                    apq += up * uq;
                }
                if app == 0.0 || aqq == 0.0 {
                    continue; // a zero column is orthogonal to everything
                }
                if apq.abs() <= JACOBI_TOL * Float::sqrt(app * aqq) {
                    continue;
                }
                rotated = true;

                // Jacobi rotation that zeroes the (p, q) inner product.
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + Float::sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + Float::sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / Float::sqrt(1.0 + t * t);
                let s = c * t;

                for i in 0..rows {
                    let up = u.data[i * cols + p];
                    let uq = u.data[i * cols + q];
                    u.data[i * cols + p] = c * up - s * uq;
                    u.data[i * cols + q] = s * up + c * uq;
                }
                for i in 0..cols {
                    let vp = v.data[i * cols + p];
                    let vq = v.data[i * cols + q];
                    v.data[i * cols + p] = c * vp - s * vq;
                    v.data[i * cols + q] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            settled = true;
            break;
        }
    }
    if !settled {
        return Err(Error::SvdNonConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }

    // Column norms are the singular values; normalize U in place.
    let mut order: Vec<usize> = (0..cols).collect();
    let mut sigma = vec![0.0; cols];
    for (j, s) in sigma.iter_mut().enumerate() {
        *s = u.col_norm(j);
        if *s > 0.0 {
            u.scale_col(j, 1.0 / *s);
        }
    }
    // Stable descending sort keeps ties in original column order.
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());

    let mut us = Matrix::zeros(rows, cols);
    let mut vs = Matrix::zeros(cols, cols);
    let mut ss = vec![0.0; cols];
    for (dst, &src) in order.iter().enumerate() {
        ss[dst] = sigma[src];
        for i in 0..rows {
            us.data[i * cols + dst] = u.data[i * cols + src];
        }
        for i in 0..cols {
            vs.data[i * cols + dst] = v.data[i * cols + src];
        }
    }

    Ok(ThinSvd {
        u: us,
        sigma: ss,
        v: vs,
    })
}

/// Lower-triangular Cholesky factor `L` with `C = L * L^T`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    l: Matrix,
}

impl CholeskyFactor {
    pub fn lower(&self) -> &Matrix {
        &self.l
    }

    /// Forward substitution `L y = b`.
    pub fn forward_substitute(&self, b: &[f64]) -> Result<Vec<f64>> {
        solve_lower_triangular(&self.l, b)
    }

    /// Forward substitution with a matrix right-hand side, `L Y = B`.
    pub fn forward_substitute_mat(&self, b: &Matrix) -> Result<Matrix> {
        solve_lower_triangular_mat(&self.l, b)
    }
}

/// Cholesky factorization of a symmetric positive definite matrix.
///
/// Fails on the first zero, negative, or non-finite pivot, naming it; the
/// caller's covariance either factors cleanly or is rejected outright.
pub fn cholesky(c: &Matrix) -> Result<CholeskyFactor> {
    if c.rows != c.cols {
        return Err(Error::DimensionMismatch {
            context: "cholesky requires a square matrix",
        });
    }
    let n = c.rows;
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut acc = c[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                // Negated comparison on purpose: NaN pivots must fail too.
                #[allow(clippy::neg_cmp_op_on_partial_ord)]
                if !(acc > 0.0) || !acc.is_finite() {
                    return Err(Error::NotPositiveDefinite { pivot: i });
                }
                l[(i, j)] = Float::sqrt(acc);
            } else {
                l[(i, j)] = acc / l[(j, j)];
            }
        }
    }
    Ok(CholeskyFactor { l })
}

/// Solves `L y = b` for lower-triangular `L` by forward substitution.
pub fn solve_lower_triangular(l: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = l.rows;
    if l.cols != n || b.len() != n {
        return Err(Error::DimensionMismatch {
            context: "triangular solve shapes disagree",
        });
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut acc = b[i];
        for k in 0..i {
            acc -= l[(i, k)] * y[k];
        }
        let d = l[(i, i)];
        if d == 0.0 {
            return Err(Error::SingularFactor { index: i });
        }
        y[i] = acc / d;
    }
    Ok(y)
}

/// Solves `L Y = B` column-block-wise by forward substitution.
pub fn solve_lower_triangular_mat(l: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = l.rows;
    if l.cols != n || b.rows != n {
        return Err(Error::DimensionMismatch {
            context: "triangular solve shapes disagree",
        });
    }
    let mut y = Matrix::zeros(n, b.cols);
    for i in 0..n {
        let d = l[(i, i)];
        if d == 0.0 {
            return Err(Error::SingularFactor { index: i });
        }
        for j in 0..b.cols {
            let mut acc = b[(i, j)];
            for k in 0..i {
                acc -= l[(i, k)] * y[(k, j)];
            }
            y[(i, j)] = acc / d;
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_matrix(rng: &mut StdRng, rows: usize, cols: usize) -> Matrix {
        let data = (0..rows * cols).map(|_| rng.gen_range(-2.0..2.0)).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn svd_of_diagonal_matrix_sorts_singular_values() {
        // J = [[1, 0], [0, 2], [0, 0]] -> sigma = [2, 1].
        let j = Matrix::from_vec(3, 2, vec![1.0, 0.0, 0.0, 2.0, 0.0, 0.0]).unwrap();
        let f = svd(&j).unwrap();
        assert_abs_diff_eq!(f.sigma[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.sigma[1], 1.0, epsilon = 1e-14);
    }

    fn check_factors(a: &Matrix, f: &ThinSvd) {
        let n = a.cols();
        // V orthogonal.
        let vtv = f.v.transpose().matmul(&f.v).unwrap();
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(vtv[(i, j)], want, epsilon = 1e-10);
            }
        }
        // U columns orthonormal where sigma > 0.
        let utu = f.u.transpose().matmul(&f.u).unwrap();
        for i in 0..n {
            for j in 0..n {
                let want = if i == j && f.sigma[i] > 0.0 { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(utu[(i, j)], want, epsilon = 1e-10);
            }
        }
        // Reconstruction.
        let mut us = f.u.clone();
        for j in 0..n {
            us.scale_col(j, f.sigma[j]);
        }
        let rebuilt = us.matmul(&f.v.transpose()).unwrap();
        let mut diff = 0.0;
        for i in 0..a.rows() {
            for j in 0..n {
                diff += (rebuilt[(i, j)] - a[(i, j)]).powi(2);
            }
        }
        assert!(diff.sqrt() <= 1e-10 * a.frob_norm().max(1.0));
        // Descending order.
        for w in f.sigma.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn svd_factor_invariants_on_random_shapes() {
        let mut rng = StdRng::seed_from_u64(11);
        for &(rows, cols) in &[(5, 2), (20, 7), (50, 4), (64, 12), (7, 7)] {
            let a = random_matrix(&mut rng, rows, cols);
            let f = svd(&a).unwrap();
            check_factors(&a, &f);
        }
    }

    #[test]
    fn svd_gram_identity_against_explicit_products() {
        // J^T J = V diag(sigma^2) V^T, with both sides formed by the plain
        // O(n^3) multiply rather than anything the SVD computed.
        let mut rng = StdRng::seed_from_u64(4);
        let j = random_matrix(&mut rng, 50, 4);
        let f = svd(&j).unwrap();

        let jtj = j.transpose().matmul(&j).unwrap();
        let mut vs = f.v.clone();
        for c in 0..4 {
            vs.scale_col(c, f.sigma[c] * f.sigma[c]);
        }
        let vs2vt = vs.matmul(&f.v.transpose()).unwrap();
        for i in 0..4 {
            for jj in 0..4 {
                assert_relative_eq!(
                    jtj[(i, jj)],
                    vs2vt[(i, jj)],
                    max_relative = 1e-9,
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn svd_handles_rank_deficiency() {
        // Second column is 3x the first: rank 1.
        let mut a = Matrix::zeros(6, 2);
        for i in 0..6 {
            a[(i, 0)] = (i as f64) - 2.0;
            a[(i, 1)] = 3.0 * ((i as f64) - 2.0);
        }
        let f = svd(&a).unwrap();
        assert!(f.sigma[1] <= rank_threshold(f.sigma[0]));
        check_factors(&a, &f);
    }

    #[test]
    fn svd_rejects_wide_matrices() {
        let a = Matrix::zeros(2, 3);
        assert!(matches!(
            svd(&a),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cholesky_of_hand_built_spd_matrix() {
        // L = [[2,0,0],[1,2,0],[1,1,3]] gives C = L L^T below.
        let c = Matrix::from_vec(
            3,
            3,
            vec![4.0, 2.0, 2.0, 2.0, 5.0, 3.0, 2.0, 3.0, 11.0],
        )
        .unwrap();
        let f = cholesky(&c).unwrap();
        let expect = [
            [2.0, 0.0, 0.0],
            [1.0, 2.0, 0.0],
            [1.0, 1.0, 3.0],
        ];
        for (i, row) in expect.iter().enumerate() {
            for (j, want) in row.iter().enumerate() {
                assert_abs_diff_eq!(f.lower()[(i, j)], *want, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn cholesky_reconstructs_random_spd() {
        let mut rng = StdRng::seed_from_u64(99);
        let b = random_matrix(&mut rng, 8, 8);
        // B B^T + 8I is comfortably positive definite.
        let mut c = b.matmul(&b.transpose()).unwrap();
        for i in 0..8 {
            c[(i, i)] += 8.0;
        }
        let f = cholesky(&c).unwrap();
        let rebuilt = f.lower().matmul(&f.lower().transpose()).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert_relative_eq!(rebuilt[(i, j)], c[(i, j)], max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_names_the_failing_pivot() {
        // Leading 1x1 and 2x2 minors are fine; the third pivot goes negative.
        let c = Matrix::from_vec(
            3,
            3,
            vec![4.0, 2.0, 8.0, 2.0, 5.0, 4.0, 8.0, 4.0, 10.0],
        )
        .unwrap();
        assert_eq!(
            cholesky(&c).unwrap_err(),
            Error::NotPositiveDefinite { pivot: 2 }
        );
    }

    #[test]
    fn forward_substitution_matches_direct_multiply() {
        let l = Matrix::from_vec(
            3,
            3,
            vec![2.0, 0.0, 0.0, 1.0, 2.0, 0.0, 1.0, 1.0, 3.0],
        )
        .unwrap();
        let y = [1.0, -2.0, 0.5];
        let b = l.matvec(&y);
        let back = solve_lower_triangular(&l, &b).unwrap();
        for (a, e) in back.iter().zip(&y) {
            assert_relative_eq!(a, e, max_relative = 1e-14);
        }
    }

    #[test]
    fn singular_triangular_factor_is_reported() {
        let l = Matrix::from_vec(2, 2, vec![1.0, 0.0, 5.0, 0.0]).unwrap();
        assert_eq!(
            solve_lower_triangular(&l, &[1.0, 1.0]).unwrap_err(),
            Error::SingularFactor { index: 1 }
        );
    }
}
