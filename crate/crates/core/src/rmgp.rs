//! Centralized recursive multi-output GP over a fixed basis.
//!
//! The posterior over `g = f(X_b)` is kept in moment form and updated one
//! observation at a time with a Kalman-style correction:
//!
//! ```text
//! μᵖ = J μ,  Cᵖ = K(x,x) − J K(X_b,x) + J C Jᵀ
//! G  = C Jᵀ (Cᵖ + σ²I)⁻¹
//! μ ← μ + G (y − μᵖ),  C ← C − G (Cᵖ + σ²I) Gᵀ
//! ```
//!
//! Per-step cost depends only on `M` and `D`.

use alloc::sync::Arc;

use crate::basis::SharedBasis;
use crate::exact::Predictor;
use crate::gaussian::GaussianMoments;
use crate::linalg::{cholesky_psd, JitterPolicy, SymMatrix};
use crate::metrics::MarginalPredictions;
use crate::points::PointSet;
use crate::{Error, Result, Vector};

#[derive(Debug, Clone)]
pub struct RmgpState {
    basis: Arc<SharedBasis>,
    noise: f64,
    posterior: GaussianMoments,
    steps: usize,
    policy: JitterPolicy,
}

impl RmgpState {
    /// Starts from the prior `(0, K(X_b, X_b))`.
    pub fn new(basis: Arc<SharedBasis>, noise: f64, policy: JitterPolicy) -> Result<Self> {
        if !(noise > 0.0 && noise.is_finite()) {
            return Err(Error::InvalidParameter("noise variance must be positive"));
        }
        let posterior = basis.prior_moments();
        Ok(RmgpState { basis, noise, posterior, steps: 0, policy })
    }

    pub fn basis(&self) -> &Arc<SharedBasis> {
        &self.basis
    }

    pub fn posterior(&self) -> &GaussianMoments {
        &self.posterior
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn gain_matrix(&self, x: &[f64]) -> Result<crate::Matrix> {
        self.basis.gain(x)
    }

    /// Predictive distribution of the latent `f(x)` before observing `y`.
    pub fn predict_latent(&self, x: &[f64]) -> Result<GaussianMoments> {
        let proj = self.basis.project(x)?;
        let mean = &proj.gain * &self.posterior.mean;
        let cov = proj.conditional.into_inner() + &proj.gain * self.posterior.cov.as_matrix() * proj.gain.transpose();
        Ok(GaussianMoments { mean, cov: SymMatrix::symmetrized(cov) })
    }

    /// Folds in one observation, returning the successor state.
    pub fn update(&self, x: &[f64], y: &[f64]) -> Result<RmgpState> {
        let d = self.basis.output_dim();
        if y.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: y.len() });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteObservation);
        }
        let proj = self.basis.project(x)?;
        let c = self.posterior.cov.as_matrix();
        // C Jᵀ, shape (M·D) × D
        let c_jt = c * proj.gain.transpose();
        let innovation_cov =
            SymMatrix::symmetrized(proj.conditional.into_inner() + &proj.gain * &c_jt).with_added_diagonal(self.noise);
        let factor = cholesky_psd(&innovation_cov, &self.policy)?;
        let mean_p = &proj.gain * &self.posterior.mean;
        let residual = Vector::from_column_slice(y) - mean_p;

        // G = C Jᵀ S⁻¹; G S Gᵀ = C Jᵀ S⁻¹ J C
        let gain_t = factor.solve(&c_jt.transpose())?;
        let mean = &self.posterior.mean + gain_t.tr_mul(&residual);
        let cov = SymMatrix::symmetrized(c - &c_jt * &gain_t);

        Ok(RmgpState {
            basis: Arc::clone(&self.basis),
            noise: self.noise,
            posterior: GaussianMoments { mean, cov },
            steps: self.steps + 1,
            policy: self.policy,
        })
    }

    /// Streams a batch of point-major observations through [`Self::update`].
    pub fn update_all(&self, x: &PointSet, y: &[f64]) -> Result<RmgpState> {
        let d = self.basis.output_dim();
        if y.len() != x.len() * d {
            return Err(Error::DimensionMismatch { expected: x.len() * d, found: y.len() });
        }
        let mut state = self.clone();
        for (i, p) in x.iter().enumerate() {
            state = state.update(p, &y[i * d..(i + 1) * d])?;
        }
        Ok(state)
    }

    /// Joint prediction at test inputs, optionally in observation space.
    pub fn predict_test(&self, x_star: &PointSet, predictive_noise: bool) -> Result<GaussianMoments> {
        let mut g = self.basis.predict_joint(&self.posterior, x_star)?;
        if predictive_noise {
            g.cov = g.cov.with_added_diagonal(self.noise);
        }
        Ok(g)
    }
}

impl Predictor for RmgpState {
    fn output_dim(&self) -> usize {
        self.basis.output_dim()
    }

    fn predict_marginals(&self, x: &PointSet, predictive_noise: bool) -> Result<MarginalPredictions> {
        self.basis.predict_marginals(&self.posterior, x, predictive_noise.then_some(self.noise))
    }
}

/// Predictions from a fixed basis posterior, such as one recovered by consensus.
#[derive(Debug, Clone)]
pub struct BasisPosterior {
    pub basis: Arc<SharedBasis>,
    pub posterior: GaussianMoments,
    pub noise: f64,
}

impl Predictor for BasisPosterior {
    fn output_dim(&self) -> usize {
        self.basis.output_dim()
    }

    fn predict_marginals(&self, x: &PointSet, predictive_noise: bool) -> Result<MarginalPredictions> {
        self.basis.predict_marginals(&self.posterior, x, predictive_noise.then_some(self.noise))
    }
}
