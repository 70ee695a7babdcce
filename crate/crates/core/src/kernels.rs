//! Matérn 3/2 kernels and the linear model of coregionalization (LMC).
//!
//! The LMC kernel is `K(x, x') = Σ_q k_q(x, x') a_q a_qᵀ`, a `D × D` block per
//! pair of inputs. Gram matrices over point sets are laid out point-major: row
//! `i * D + a` and column `j * D + b` hold `Cov(f_a(x_i), f_b(x'_j))`.

use alloc::vec::Vec;

use crate::linalg::SymMatrix;
use crate::points::{distance, PointSet};
use crate::{Error, Matrix, Result};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Isotropic Matérn 3/2 kernel `σ² (1 + √3 r/ℓ) exp(−√3 r/ℓ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matern32 {
    pub variance: f64,
    pub lengthscale: f64,
}

impl Matern32 {
    pub fn new(variance: f64, lengthscale: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidParameter("kernel variance must be positive"));
        }
        if !(lengthscale > 0.0 && lengthscale.is_finite()) {
            return Err(Error::InvalidParameter("kernel lengthscale must be positive"));
        }
        Ok(Matern32 { variance, lengthscale })
    }

    pub fn of_distance(&self, r: f64) -> f64 {
        let z = SQRT_3 * r / self.lengthscale;
        self.variance * (1.0 + z) * libm::exp(-z)
    }

    pub fn eval(&self, x1: &[f64], x2: &[f64]) -> f64 {
        self.of_distance(distance(x1, x2))
    }
}

/// LMC parameters: `Q` latent Matérn components mixed by coregionalization vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LmcParams {
    components: Vec<Matern32>,
    coreg: Vec<Vec<f64>>,
    // a_q a_qᵀ, row-major D×D per component
    outer: Vec<Vec<f64>>,
}

impl LmcParams {
    pub fn new(components: Vec<Matern32>, coreg: Vec<Vec<f64>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter("LMC needs at least one latent component"));
        }
        if coreg.len() != components.len() {
            return Err(Error::DimensionMismatch { expected: components.len(), found: coreg.len() });
        }
        let d = coreg[0].len();
        if d == 0 {
            return Err(Error::InvalidParameter("output dimension must be positive"));
        }
        for a in &coreg {
            if a.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: a.len() });
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("coregionalization entries must be finite"));
            }
        }
        let outer = coreg
            .iter()
            .map(|a| {
                let mut m = Vec::with_capacity(d * d);
                for x in a {
                    for y in a {
                        m.push(x * y);
                    }
                }
                m
            })
            .collect();
        Ok(LmcParams { components, coreg, outer })
    }

    /// Single-output kernel (`D = 1`, `a = (1)`).
    pub fn single_output(kernel: Matern32) -> Self {
        LmcParams::new(alloc::vec![kernel], alloc::vec![alloc::vec![1.0]]).expect("valid single-output kernel")
    }

    pub fn output_dim(&self) -> usize {
        self.coreg[0].len()
    }

    pub fn num_latent(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Matern32] {
        &self.components
    }

    pub fn coreg_vectors(&self) -> &[Vec<f64>] {
        &self.coreg
    }

    /// The scalar kernel of output `d` alone, `Σ_q a_{dq}² k_q`.
    pub fn marginal(&self, d: usize) -> LmcParams {
        let coreg = self.coreg.iter().map(|a| alloc::vec![a[d]]).collect();
        LmcParams::new(self.components.clone(), coreg).expect("marginal of a valid kernel")
    }

    /// Outputs whose row of coregionalization weights is identically zero.
    /// Such outputs have a degenerate zero prior.
    pub fn degenerate_outputs(&self) -> Vec<usize> {
        (0..self.output_dim()).filter(|&d| self.coreg.iter().all(|a| a[d] == 0.0)).collect()
    }

    fn accumulate_block(&self, x1: &[f64], x2: &[f64], out: &mut Matrix, row0: usize, col0: usize) {
        let d = self.output_dim();
        let r = distance(x1, x2);
        for (k, outer) in self.components.iter().zip(&self.outer) {
            let kv = k.of_distance(r);
            for a in 0..d {
                for b in 0..d {
                    out[(row0 + a, col0 + b)] += kv * outer[a * d + b];
                }
            }
        }
    }

    /// The `D × D` block `Σ_q k_q(x1, x2) a_q a_qᵀ`.
    pub fn block(&self, x1: &[f64], x2: &[f64]) -> Matrix {
        let d = self.output_dim();
        let mut out = Matrix::zeros(d, d);
        self.accumulate_block(x1, x2, &mut out, 0, 0);
        out
    }

    /// Cross-covariance `K(X, X2)` of shape `(N·D) × (M·D)`.
    pub fn gram(&self, x: &PointSet, x2: &PointSet) -> Result<Matrix> {
        if x.dim() != x2.dim() {
            return Err(Error::DimensionMismatch { expected: x.dim(), found: x2.dim() });
        }
        let d = self.output_dim();
        let mut out = Matrix::zeros(x.len() * d, x2.len() * d);
        for (i, p) in x.iter().enumerate() {
            for (j, q) in x2.iter().enumerate() {
                self.accumulate_block(p, q, &mut out, i * d, j * d);
            }
        }
        Ok(out)
    }

    /// `K(X, X)`, filling the lower triangle and mirroring it so the result is exactly symmetric.
    pub fn gram_sym(&self, x: &PointSet) -> SymMatrix {
        let d = self.output_dim();
        let n = x.len() * d;
        let mut out = Matrix::zeros(n, n);
        for i in 0..x.len() {
            for j in 0..=i {
                self.accumulate_block(x.point(i), x.point(j), &mut out, i * d, j * d);
            }
        }
        for c in 0..n {
            for r in (c + 1)..n {
                out[(c, r)] = out[(r, c)];
            }
        }
        SymMatrix::try_new(out).expect("mirrored gram is symmetric")
    }

    /// Cross-covariance `K(x, X)` of a single point against a set, shape `D × (M·D)`.
    pub fn cross(&self, x: &[f64], set: &PointSet) -> Matrix {
        let d = self.output_dim();
        let mut out = Matrix::zeros(d, set.len() * d);
        for (j, q) in set.iter().enumerate() {
            self.accumulate_block(x, q, &mut out, 0, j * d);
        }
        out
    }
}
