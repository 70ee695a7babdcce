//! Exact batch Gaussian process regression: the LMC multi-output model and the
//! independent single-output baseline.

use alloc::vec::Vec;

use crate::gaussian::GaussianMoments;
use crate::kernels::LmcParams;
use crate::linalg::{cholesky_psd, JitterPolicy, PsdFactor, SymMatrix};
use crate::metrics::MarginalPredictions;
use crate::points::PointSet;
use crate::{Error, Matrix, Result, Vector};

/// Anything that produces per-point marginal predictions.
pub trait Predictor {
    fn output_dim(&self) -> usize;

    /// Per-point, per-output predictive means and variances. With
    /// `predictive_noise` the observation noise is added to the variances.
    fn predict_marginals(&self, x: &PointSet, predictive_noise: bool) -> Result<MarginalPredictions>;
}

/// A fitted exact GP with the Cholesky factor of `K_Y = K(X, X) + σ_n² I` cached.
#[derive(Debug, Clone)]
pub struct ExactGp {
    kernel: LmcParams,
    noise: f64,
    train_x: PointSet,
    train_y: Vector,
    factor: PsdFactor,
    alpha: Vector,
}

// Test points per block when only marginals are needed.
const MARGINAL_CHUNK: usize = 256;

impl ExactGp {
    /// Fits to `y`, stacked point-major (`y[i * D + d]`).
    pub fn fit(kernel: LmcParams, noise: f64, x: PointSet, y: Vector, policy: &JitterPolicy) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        if !(noise > 0.0 && noise.is_finite()) {
            return Err(Error::InvalidParameter("noise variance must be positive"));
        }
        let d = kernel.output_dim();
        if y.len() != x.len() * d {
            return Err(Error::DimensionMismatch { expected: x.len() * d, found: y.len() });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteObservation);
        }
        let k_y = kernel.gram_sym(&x).with_added_diagonal(noise);
        let factor = cholesky_psd(&k_y, policy)?;
        let alpha = factor.solve_vector(&y)?;
        Ok(ExactGp { kernel, noise, train_x: x, train_y: y, factor, alpha })
    }

    pub fn factor(&self) -> &PsdFactor {
        &self.factor
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn kernel(&self) -> &LmcParams {
        &self.kernel
    }

    pub fn train_inputs(&self) -> &PointSet {
        &self.train_x
    }

    pub fn train_targets(&self) -> &Vector {
        &self.train_y
    }

    /// `log p(y | X) = −½ yᵀ K_Y⁻¹ y − ½ log|K_Y| − (N·D/2) log 2π`.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.train_y.len() as f64;
        -0.5 * self.train_y.dot(&self.alpha)
            - 0.5 * self.factor.ln_determinant()
            - 0.5 * n * libm::log(2.0 * core::f64::consts::PI)
    }

    /// Joint predictive posterior over all `p·D` test outputs.
    pub fn predict(&self, x_star: &PointSet, predictive_noise: bool) -> Result<GaussianMoments> {
        let k_star = self.kernel.gram(&self.train_x, x_star)?;
        let mean = k_star.tr_mul(&self.alpha);
        let v = self.factor.solve_lower(&k_star)?;
        let mut cov = self.kernel.gram_sym(x_star).into_inner() - v.tr_mul(&v);
        if predictive_noise {
            for i in 0..cov.nrows() {
                cov[(i, i)] += self.noise;
            }
        }
        Ok(GaussianMoments { mean, cov: SymMatrix::symmetrized(cov) })
    }
}

impl Predictor for ExactGp {
    fn output_dim(&self) -> usize {
        self.kernel.output_dim()
    }

    fn predict_marginals(&self, x: &PointSet, predictive_noise: bool) -> Result<MarginalPredictions> {
        let d = self.kernel.output_dim();
        let mut mean = Vec::with_capacity(x.len() * d);
        let mut var = Vec::with_capacity(x.len() * d);
        let indices: Vec<usize> = (0..x.len()).collect();
        for chunk in indices.chunks(MARGINAL_CHUNK) {
            let xs = x.select(chunk);
            let k_star = self.kernel.gram(&self.train_x, &xs)?;
            mean.extend(k_star.tr_mul(&self.alpha).iter());
            let v = self.factor.solve_lower(&k_star)?;
            for (i, p) in xs.iter().enumerate() {
                let prior = self.kernel.block(p, p);
                for a in 0..d {
                    let col = v.column(i * d + a);
                    let mut s = prior[(a, a)] - col.dot(&col);
                    if predictive_noise {
                        s += self.noise;
                    }
                    var.push(s);
                }
            }
        }
        MarginalPredictions::new(d, mean, var)
    }
}

/// Independent exact GPs, one per output component.
#[derive(Debug, Clone)]
pub struct Sogp {
    models: Vec<ExactGp>,
}

impl Sogp {
    /// Fits output `d` of the point-major `y` with the single-output kernel
    /// `kernels[d]`, ignoring cross-output correlation.
    pub fn fit(kernels: &[LmcParams], noise: f64, x: &PointSet, y: &Vector, policy: &JitterPolicy) -> Result<Self> {
        let d = kernels.len();
        if d == 0 {
            return Err(Error::InvalidParameter("need one kernel per output"));
        }
        if kernels.iter().any(|k| k.output_dim() != 1) {
            return Err(Error::InvalidParameter("independent-output kernels must be single-output"));
        }
        if x.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        if y.len() != x.len() * d {
            return Err(Error::DimensionMismatch { expected: x.len() * d, found: y.len() });
        }
        let models = kernels
            .iter()
            .enumerate()
            .map(|(out, k)| {
                let column = Vector::from_iterator(x.len(), (0..x.len()).map(|i| y[i * d + out]));
                ExactGp::fit(k.clone(), noise, x.clone(), column, policy)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Sogp { models })
    }

    pub fn models(&self) -> &[ExactGp] {
        &self.models
    }

    /// Joint prediction, point-major, with zero cross-output covariance.
    pub fn predict(&self, x_star: &PointSet, predictive_noise: bool) -> Result<GaussianMoments> {
        let d = self.models.len();
        let p = x_star.len();
        let mut mean = Vector::zeros(p * d);
        let mut cov = Matrix::zeros(p * d, p * d);
        for (out, model) in self.models.iter().enumerate() {
            let g = model.predict(x_star, predictive_noise)?;
            for i in 0..p {
                mean[i * d + out] = g.mean[i];
                for j in 0..p {
                    cov[(i * d + out, j * d + out)] = g.cov[(i, j)];
                }
            }
        }
        Ok(GaussianMoments { mean, cov: SymMatrix::try_new(cov)? })
    }
}

impl Predictor for Sogp {
    fn output_dim(&self) -> usize {
        self.models.len()
    }

    fn predict_marginals(&self, x: &PointSet, predictive_noise: bool) -> Result<MarginalPredictions> {
        let d = self.models.len();
        let per_output = self
            .models
            .iter()
            .map(|m| m.predict_marginals(x, predictive_noise))
            .collect::<Result<Vec<_>>>()?;
        let mut mean = Vec::with_capacity(x.len() * d);
        let mut var = Vec::with_capacity(x.len() * d);
        for i in 0..x.len() {
            for p in &per_output {
                mean.push(p.mean()[i]);
                var.push(p.var()[i]);
            }
        }
        MarginalPredictions::new(d, mean, var)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Matern32;
    use alloc::vec;

    fn unit_kernel() -> LmcParams {
        LmcParams::single_output(Matern32::new(1.0, 0.3).unwrap())
    }

    #[test]
    fn empty_training_set_rejected() {
        let r = ExactGp::fit(unit_kernel(), 0.1, PointSet::empty(2), Vector::zeros(0), &JitterPolicy::default());
        assert!(matches!(r, Err(Error::EmptyTrainingSet)));
    }

    #[test]
    fn single_point_factor() {
        let x = PointSet::from_points(2, &[[0.2, 0.4]]).unwrap();
        let gp = ExactGp::fit(unit_kernel(), 1.0, x, Vector::from_vec(vec![0.7]), &JitterPolicy::default()).unwrap();
        assert_eq!(gp.factor().jitter(), 0.0);
        let l = gp.factor().l();
        assert!((l[(0, 0)] * l[(0, 0)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn scalar_posterior_at_training_input() {
        let x = PointSet::from_points(2, &[[0.2, 0.4]]).unwrap();
        let noise = 0.3;
        let y = 1.7;
        let gp = ExactGp::fit(unit_kernel(), noise, x.clone(), Vector::from_vec(vec![y]), &JitterPolicy::default())
            .unwrap();
        let g = gp.predict(&x, false).unwrap();
        assert!((g.mean[0] - y / (1.0 + noise)).abs() < 1e-14);
        assert!((g.cov[(0, 0)] - (1.0 - 1.0 / (1.0 + noise))).abs() < 1e-14);
        let noisy = gp.predict(&x, true).unwrap();
        assert!((noisy.cov[(0, 0)] - g.cov[(0, 0)] - noise).abs() < 1e-14);
    }

    #[test]
    fn single_point_marginal_likelihood() {
        // y ~ N(0, 1 + σ²) with σ² = 1: log N(1; 0, 2)
        let x = PointSet::from_points(2, &[[0.2, 0.4]]).unwrap();
        let gp = ExactGp::fit(unit_kernel(), 1.0, x, Vector::from_vec(vec![1.0]), &JitterPolicy::default()).unwrap();
        let expected = -0.25 - 0.5 * libm::log(2.0) - 0.5 * libm::log(2.0 * core::f64::consts::PI);
        assert!((gp.log_marginal_likelihood() - expected).abs() < 1e-14);
    }

    #[test]
    fn reverts_to_prior_far_away() {
        let x = PointSet::from_points(2, &[[0.0, 0.0], [0.1, 0.0]]).unwrap();
        let gp = ExactGp::fit(unit_kernel(), 0.01, x, Vector::from_vec(vec![1.0, -0.5]), &JitterPolicy::default())
            .unwrap();
        let far = PointSet::from_points(2, &[[20.0 * 0.3 + 0.1, 0.0]]).unwrap();
        let g = gp.predict(&far, false).unwrap();
        assert!(g.mean[0].abs() < 1e-6);
        assert!((g.cov[(0, 0)] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn marginals_agree_with_joint_diagonal() {
        let k = LmcParams::new(
            vec![Matern32::new(1.0, 0.3).unwrap(), Matern32::new(0.4, 0.1).unwrap()],
            vec![vec![1.0, 0.5], vec![0.0, 1.0]],
        )
        .unwrap();
        let x = PointSet::from_points(2, &[[0.0, 0.0], [0.5, 0.1], [0.2, 0.9]]).unwrap();
        let y = Vector::from_vec(vec![0.1, 0.2, -0.3, 0.4, 0.9, -1.0]);
        let gp = ExactGp::fit(k, 0.05, x, y, &JitterPolicy::default()).unwrap();
        let xs = PointSet::from_points(2, &[[0.1, 0.1], [0.7, 0.7]]).unwrap();
        let joint = gp.predict(&xs, true).unwrap();
        let marg = gp.predict_marginals(&xs, true).unwrap();
        for i in 0..4 {
            assert!((joint.mean[i] - marg.mean()[i]).abs() < 1e-13);
            assert!((joint.cov[(i, i)] - marg.var()[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn wrong_target_length_rejected() {
        let x = PointSet::from_points(2, &[[0.0, 0.0]]).unwrap();
        let r = ExactGp::fit(unit_kernel(), 0.1, x, Vector::zeros(2), &JitterPolicy::default());
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }
}
