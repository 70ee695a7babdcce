//! The shared basis inputs `X_b` and the projections every recursive model
//! builds from them.
//!
//! For an input `x` the gain `J = K(x, X_b) K(X_b, X_b)⁻¹` maps the latent values
//! at the basis, `g = f(X_b)`, to the conditional mean of `f(x)`, and
//! `K(x, x) − J K(X_b, x)` is the conditional covariance of `f(x)` given `g`.

use alloc::vec::Vec;

use crate::gaussian::{GaussianInfo, GaussianMoments};
use crate::kernels::LmcParams;
use crate::linalg::{cholesky_psd, JitterPolicy, PsdFactor, SymMatrix};
use crate::metrics::MarginalPredictions;
use crate::points::PointSet;
use crate::{Error, Matrix, Result, Vector};

#[derive(Debug, Clone)]
pub struct SharedBasis {
    points: PointSet,
    kernel: LmcParams,
    prior_gram: SymMatrix,
    factor: PsdFactor,
}

/// Kernel quantities for one input against the basis.
#[derive(Debug, Clone)]
pub struct Projection {
    /// `J`, shape `D × (M·D)`.
    pub gain: Matrix,
    /// `K(X_b, x)`, shape `(M·D) × D`.
    pub cross: Matrix,
    /// `K(x, x) − J K(X_b, x)`, re-symmetrized.
    pub conditional: SymMatrix,
}

const PREDICT_CHUNK: usize = 256;

impl SharedBasis {
    pub fn new(points: PointSet, kernel: LmcParams, policy: &JitterPolicy) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("basis needs at least one point"));
        }
        if let Some(d) = points.min_pairwise_distance() {
            if !(d > 0.0) {
                return Err(Error::InvalidParameter("basis points must be pairwise distinct"));
            }
        }
        let prior_gram = kernel.gram_sym(&points);
        let factor = cholesky_psd(&prior_gram, policy)?;
        Ok(SharedBasis { points, kernel, prior_gram, factor })
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn kernel(&self) -> &LmcParams {
        &self.kernel
    }

    pub fn output_dim(&self) -> usize {
        self.kernel.output_dim()
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    /// Length `M·D` of the stacked latent vector `g`.
    pub fn state_dim(&self) -> usize {
        self.points.len() * self.kernel.output_dim()
    }

    /// `K(X_b, X_b)`.
    pub fn prior_gram(&self) -> &SymMatrix {
        &self.prior_gram
    }

    /// Jitter the prior Gram factorization needed.
    pub fn jitter(&self) -> f64 {
        self.factor.jitter()
    }

    /// `(m(X_b), K(X_b, X_b))` with the zero prior mean.
    pub fn prior_moments(&self) -> GaussianMoments {
        GaussianMoments { mean: Vector::zeros(self.state_dim()), cov: self.prior_gram.clone() }
    }

    /// `(0, K(X_b, X_b)⁻¹)`.
    pub fn prior_info(&self) -> GaussianInfo {
        GaussianInfo { xi: Vector::zeros(self.state_dim()), omega: self.factor.inverse() }
    }

    pub fn gain(&self, x: &[f64]) -> Result<Matrix> {
        self.check_input(x)?;
        let cross = self.kernel.cross(x, &self.points).transpose();
        Ok(self.factor.solve(&cross)?.transpose())
    }

    pub fn project(&self, x: &[f64]) -> Result<Projection> {
        self.check_input(x)?;
        let cross = self.kernel.cross(x, &self.points).transpose();
        let gain = self.factor.solve(&cross)?.transpose();
        let conditional = SymMatrix::symmetrized(self.kernel.block(x, x) - &gain * &cross);
        Ok(Projection { gain, cross, conditional })
    }

    /// Joint prediction of `f(X*)` under a basis posterior:
    /// mean `J* μ`, covariance `K(X*, X*) − J* K(X_b, X*) + J* C J*ᵀ`.
    pub fn predict_joint(&self, posterior: &GaussianMoments, x_star: &PointSet) -> Result<GaussianMoments> {
        self.check_posterior(posterior)?;
        let k_bs = self.kernel.gram(&self.points, x_star)?;
        let a = self.factor.solve(&k_bs)?;
        let mean = a.tr_mul(&posterior.mean);
        let cov = self.kernel.gram_sym(x_star).into_inner() - k_bs.tr_mul(&a) + a.tr_mul(&(posterior.cov.as_matrix() * &a));
        Ok(GaussianMoments { mean, cov: SymMatrix::symmetrized(cov) })
    }

    /// Per-point marginals of [`Self::predict_joint`], optionally with `noise` added.
    pub fn predict_marginals(
        &self,
        posterior: &GaussianMoments,
        x_star: &PointSet,
        noise: Option<f64>,
    ) -> Result<MarginalPredictions> {
        self.check_posterior(posterior)?;
        let d = self.output_dim();
        let mut mean = Vec::with_capacity(x_star.len() * d);
        let mut var = Vec::with_capacity(x_star.len() * d);
        let indices: Vec<usize> = (0..x_star.len()).collect();
        for chunk in indices.chunks(PREDICT_CHUNK) {
            let xs = x_star.select(chunk);
            let k_bs = self.kernel.gram(&self.points, &xs)?;
            let a = self.factor.solve(&k_bs)?;
            mean.extend(a.tr_mul(&posterior.mean).iter());
            let ca = posterior.cov.as_matrix() * &a;
            for (i, p) in xs.iter().enumerate() {
                let prior = self.kernel.block(p, p);
                for out in 0..d {
                    let c = i * d + out;
                    let mut v = prior[(out, out)] - k_bs.column(c).dot(&a.column(c)) + a.column(c).dot(&ca.column(c));
                    if let Some(n) = noise {
                        v += n;
                    }
                    var.push(v);
                }
            }
        }
        MarginalPredictions::new(d, mean, var)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.points.dim() {
            return Err(Error::DimensionMismatch { expected: self.points.dim(), found: x.len() });
        }
        Ok(())
    }

    fn check_posterior(&self, g: &GaussianMoments) -> Result<()> {
        if g.dim() != self.state_dim() {
            return Err(Error::DimensionMismatch { expected: self.state_dim(), found: g.dim() });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Matern32;
    use alloc::vec;

    #[test]
    fn duplicate_basis_points_rejected() {
        let k = LmcParams::single_output(Matern32::new(1.0, 0.2).unwrap());
        let pts = PointSet::from_points(2, &[[0.1, 0.1], [0.1, 0.1]]).unwrap();
        assert!(SharedBasis::new(pts, k, &JitterPolicy::default()).is_err());
    }

    #[test]
    fn scalar_gain_is_kernel_ratio() {
        let kern = Matern32::new(1.7, 0.4).unwrap();
        let basis = SharedBasis::new(
            PointSet::from_points(2, &[[0.3, 0.3]]).unwrap(),
            LmcParams::single_output(kern),
            &JitterPolicy::default(),
        )
        .unwrap();
        let x = [0.5, 0.1];
        let j = basis.gain(&x).unwrap();
        let expected = kern.eval(&x, &[0.3, 0.3]) / kern.eval(&[0.3, 0.3], &[0.3, 0.3]);
        assert!((j[(0, 0)] - expected).abs() < 1e-15);
    }

    #[test]
    fn gain_decays_far_from_basis() {
        let k = LmcParams::new(
            vec![Matern32::new(1.0, 0.2).unwrap(), Matern32::new(1.0, 0.2).unwrap()],
            vec![vec![1.0, 0.3], vec![0.0, 1.0]],
        )
        .unwrap();
        let basis =
            SharedBasis::new(PointSet::grid_2d([0.0, 1.0, 0.0, 1.0], 3), k, &JitterPolicy::default()).unwrap();
        let j = basis.gain(&[30.0, 30.0]).unwrap();
        assert!(j.abs().max() <= 1e-6);
    }
}
