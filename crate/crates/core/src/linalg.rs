//! Dense symmetric positive-(semi)definite linear algebra.
//!
//! Every inverse appearing in the inference equations is realised as a Cholesky
//! solve through [`PsdFactor`]. Factorizations go through a jitter ladder: the
//! unmodified matrix is tried first, then `base * 10^k` is added to the diagonal
//! for `k = 0..=max_decades`, where `base` is `scale * mean(diag)`.

use core::ops::Deref;

use nalgebra::{Cholesky, Dyn};

use crate::{Error, Matrix, Result, Vector};

/// A dense matrix whose entries satisfy `a[(i, j)] == a[(j, i)]` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    /// Accepts `m` only if it is square and exactly symmetric.
    pub fn try_new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let n = m.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        Ok(SymMatrix(m))
    }

    /// Replaces `m` by `(m + mᵀ) / 2`.
    ///
    /// Panics if `m` is not square.
    pub fn symmetrized(mut m: Matrix) -> Self {
        symmetrize_in_place(&mut m);
        SymMatrix(m)
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(Matrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix(Matrix::zeros(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymMatrix(Matrix::from_diagonal(&Vector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_inner(self) -> Matrix {
        self.0
    }

    pub fn mean_diagonal(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 0.0;
        }
        self.0.diagonal().iter().sum::<f64>() / n as f64
    }

    /// `self + other`; the sum of symmetric matrices is symmetric entrywise.
    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &other.0)
    }

    pub fn scaled(&self, factor: f64) -> SymMatrix {
        SymMatrix(&self.0 * factor)
    }

    /// `self + a` for a symmetric update `a` given as a plain matrix.
    pub fn add_symmetrized(&self, a: &Matrix) -> SymMatrix {
        SymMatrix::symmetrized(&self.0 + a)
    }

    pub fn with_added_diagonal(&self, delta: f64) -> SymMatrix {
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += delta;
        }
        SymMatrix(m)
    }

    /// Principal sub-block `[start, start + len)²`.
    pub fn block(&self, start: usize, len: usize) -> SymMatrix {
        SymMatrix(self.0.view((start, start), (len, len)).into_owned())
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vector {
        let eig = nalgebra::SymmetricEigen::new(self.0.clone());
        let mut values: alloc::vec::Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(|a, b| a.total_cmp(b));
        Vector::from_vec(values)
    }
}

impl Deref for SymMatrix {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

pub fn symmetrize_in_place(m: &mut Matrix) {
    assert!(m.is_square(), "symmetrize needs a square matrix");
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Diagonal jitter ladder used when a factorization fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterPolicy {
    /// Base jitter relative to the mean diagonal.
    pub scale: f64,
    /// Number of decades tried above the base.
    pub max_decades: u32,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        JitterPolicy { scale: 1e-10, max_decades: 8 }
    }
}

impl JitterPolicy {
    /// Absolute base jitter for a matrix with the given mean diagonal.
    pub fn base_for(&self, mean_diag: f64) -> f64 {
        if mean_diag.is_finite() && mean_diag > 0.0 {
            self.scale * mean_diag
        } else {
            self.scale
        }
    }

    /// Candidate diagonal shifts in the order they are tried.
    pub fn ladder(&self, mean_diag: f64) -> impl Iterator<Item = f64> {
        let base = self.base_for(mean_diag);
        core::iter::once(0.0).chain((0..=self.max_decades).map(move |k| base * pow10(k)))
    }
}

fn pow10(k: u32) -> f64 {
    (0..k).fold(1.0, |acc, _| acc * 10.0)
}

/// Cholesky factor `L` with `L Lᵀ = A + δI`, together with the jitter `δ` that was needed.
#[derive(Debug, Clone)]
pub struct PsdFactor {
    chol: Cholesky<f64, Dyn>,
    jitter: f64,
}

impl PsdFactor {
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    /// The lower-triangular factor.
    pub fn l(&self) -> Matrix {
        self.chol.l()
    }

    /// Solves `(L Lᵀ) X = B`.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        self.check_rows(b.nrows())?;
        Ok(self.chol.solve(b))
    }

    pub fn solve_vector(&self, b: &Vector) -> Result<Vector> {
        self.check_rows(b.nrows())?;
        Ok(self.chol.solve(b))
    }

    /// Solves `L X = B` (half solve, used for quadratic forms `Bᵀ A⁻¹ B = XᵀX`).
    pub fn solve_lower(&self, b: &Matrix) -> Result<Matrix> {
        self.check_rows(b.nrows())?;
        let x = self
            .chol
            .l_dirty()
            .solve_lower_triangular(b)
            .expect("cholesky factor has a nonzero diagonal");
        Ok(x)
    }

    /// `(L Lᵀ)⁻¹`, materialized and re-symmetrized.
    pub fn inverse(&self) -> SymMatrix {
        SymMatrix::symmetrized(self.chol.inverse())
    }

    pub fn ln_determinant(&self) -> f64 {
        self.chol.l_dirty().diagonal().iter().map(|d| 2.0 * libm::log(*d)).sum()
    }

    fn check_rows(&self, rows: usize) -> Result<()> {
        let n = self.dim();
        if rows != n {
            return Err(Error::DimensionMismatch { expected: n, found: rows });
        }
        Ok(())
    }
}

/// Factorizes `a`, climbing the jitter ladder until a factorization succeeds.
pub fn cholesky_psd(a: &SymMatrix, policy: &JitterPolicy) -> Result<PsdFactor> {
    if a.dim() == 0 {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    let mut last = 0.0;
    for delta in policy.ladder(a.mean_diagonal()) {
        last = delta;
        let shifted = if delta == 0.0 { a.0.clone() } else { a.with_added_diagonal(delta).0 };
        if let Some(chol) = Cholesky::new(shifted) {
            return Ok(PsdFactor { chol, jitter: delta });
        }
    }
    Err(Error::NotPositiveDefinite { jitter: last })
}

/// Solves `(L Lᵀ) X = B` for a factor produced by [`cholesky_psd`].
pub fn solve_psd(factor: &PsdFactor, b: &Matrix) -> Result<Matrix> {
    factor.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(rows: usize, data: &[f64]) -> SymMatrix {
        SymMatrix::try_new(Matrix::from_row_slice(rows, rows, data)).unwrap()
    }

    #[test]
    fn identity_factors_without_jitter() {
        let f = cholesky_psd(&SymMatrix::identity(3), &JitterPolicy::default()).unwrap();
        assert_eq!(f.jitter(), 0.0);
        assert_eq!(f.l(), Matrix::identity(3, 3));
    }

    #[test]
    fn hand_computed_two_by_two() {
        let f = cholesky_psd(&sym(2, &[4.0, 2.0, 2.0, 3.0]), &JitterPolicy::default()).unwrap();
        assert_eq!(f.jitter(), 0.0);
        let l = f.l();
        assert!((l[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((l[(1, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(l[(0, 1)], 0.0);
        assert!((l[(1, 1)] - libm::sqrt(2.0)).abs() < 1e-15);

        let x = solve_psd(&f, &Matrix::from_row_slice(2, 1, &[1.0, 0.0])).unwrap();
        assert!((x[(0, 0)] - 0.375).abs() < 1e-15);
        assert!((x[(1, 0)] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn rank_one_needs_jitter() {
        let a = sym(2, &[1.0, 1.0, 1.0, 1.0]);
        let f = cholesky_psd(&a, &JitterPolicy::default()).unwrap();
        let delta = f.jitter();
        assert!(delta > 0.0);
        let l = f.l();
        let err = (&l * l.transpose() - a.as_matrix()).abs().max();
        assert!(err <= 10.0 * delta, "err {err} delta {delta}");
    }

    #[test]
    fn negative_definite_exhausts_ladder() {
        let a = sym(2, &[-1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            cholesky_psd(&a, &JitterPolicy::default()),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let f = cholesky_psd(&SymMatrix::identity(3), &JitterPolicy::default()).unwrap();
        let b = Matrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64 - 1.5);
        assert_eq!(solve_psd(&f, &b).unwrap(), b);
    }

    #[test]
    fn solve_rejects_wrong_rows() {
        let f = cholesky_psd(&SymMatrix::identity(3), &JitterPolicy::default()).unwrap();
        assert_eq!(
            solve_psd(&f, &Matrix::zeros(2, 1)),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        );
    }

    #[test]
    fn try_new_rejects_asymmetry() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert_eq!(SymMatrix::try_new(m.clone()), Err(Error::NotSymmetric));
        let s = SymMatrix::symmetrized(m);
        assert_eq!(s[(0, 1)], s[(1, 0)]);
        assert_eq!(s[(0, 1)], 0.45);
    }

    #[test]
    fn ladder_starts_at_zero_and_climbs_by_decades() {
        let ladder: alloc::vec::Vec<f64> = JitterPolicy { scale: 1e-10, max_decades: 2 }.ladder(2.0).collect();
        assert_eq!(ladder.len(), 4);
        assert_eq!(ladder[0], 0.0);
        assert!((ladder[1] - 2e-10).abs() < 1e-24);
        assert!((ladder[3] - 2e-8).abs() < 1e-22);
    }
}
