//! Moment and information parameterizations of a multivariate Gaussian.

use crate::linalg::{cholesky_psd, JitterPolicy, SymMatrix};
use crate::{Error, Result, Vector};

/// Gaussian in moment form: mean and covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMoments {
    pub mean: Vector,
    pub cov: SymMatrix,
}

/// Gaussian in information form: `xi = Ω μ`, `omega = C⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianInfo {
    pub xi: Vector,
    pub omega: SymMatrix,
}

impl GaussianMoments {
    pub fn new(mean: Vector, cov: SymMatrix) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch { expected: cov.dim(), found: mean.len() });
        }
        Ok(GaussianMoments { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn to_information(&self, policy: &JitterPolicy) -> Result<GaussianInfo> {
        self.to_information_reporting(policy).map(|(info, _)| info)
    }

    /// As [`Self::to_information`], also returning the jitter the factorization needed.
    pub fn to_information_reporting(&self, policy: &JitterPolicy) -> Result<(GaussianInfo, f64)> {
        let factor = cholesky_psd(&self.cov, policy)?;
        let omega = factor.inverse();
        let xi = factor.solve_vector(&self.mean)?;
        Ok((GaussianInfo { xi, omega }, factor.jitter()))
    }
}

impl GaussianInfo {
    pub fn new(xi: Vector, omega: SymMatrix) -> Result<Self> {
        if xi.len() != omega.dim() {
            return Err(Error::DimensionMismatch { expected: omega.dim(), found: xi.len() });
        }
        Ok(GaussianInfo { xi, omega })
    }

    pub fn dim(&self) -> usize {
        self.xi.len()
    }

    pub fn to_moments(&self, policy: &JitterPolicy) -> Result<GaussianMoments> {
        self.to_moments_reporting(policy).map(|(m, _)| m)
    }

    /// Recovers `(Ω⁻¹ ξ, Ω⁻¹)`; the covariance is materialized once.
    pub fn to_moments_reporting(&self, policy: &JitterPolicy) -> Result<(GaussianMoments, f64)> {
        let factor = cholesky_psd(&self.omega, policy)?;
        let cov = factor.inverse();
        let mean = factor.solve_vector(&self.xi)?;
        Ok((GaussianMoments { mean, cov }, factor.jitter()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_is_self_dual() {
        let g = GaussianMoments::new(Vector::zeros(3), SymMatrix::identity(3)).unwrap();
        let info = g.to_information(&JitterPolicy::default()).unwrap();
        assert_eq!(info.xi, Vector::zeros(3));
        assert_eq!(info.omega, SymMatrix::identity(3));
        let back = info.to_moments(&JitterPolicy::default()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn diagonal_case_both_directions() {
        let g = GaussianMoments::new(Vector::from_vec(alloc::vec![1.0, 2.0]), SymMatrix::from_diagonal(&[2.0, 4.0]))
            .unwrap();
        let info = g.to_information(&JitterPolicy::default()).unwrap();
        assert!((info.xi[0] - 0.5).abs() < 1e-15 && (info.xi[1] - 0.5).abs() < 1e-15);
        assert!((info.omega[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((info.omega[(1, 1)] - 0.25).abs() < 1e-15);
        assert_eq!(info.omega[(0, 1)], 0.0);

        let back = info.to_moments(&JitterPolicy::default()).unwrap();
        assert!((back.mean[0] - 1.0).abs() < 1e-15 && (back.mean[1] - 2.0).abs() < 1e-15);
        assert!((back.cov[(0, 0)] - 2.0).abs() < 1e-15 && (back.cov[(1, 1)] - 4.0).abs() < 1e-15);
    }

    #[test]
    fn recovered_covariance_is_exactly_symmetric() {
        let omega = SymMatrix::try_new(crate::Matrix::from_row_slice(
            3,
            3,
            &[3.0, 0.7, -0.2, 0.7, 2.5, 0.3, -0.2, 0.3, 1.9],
        ))
        .unwrap();
        let info = GaussianInfo::new(Vector::from_vec(alloc::vec![0.1, -0.4, 2.0]), omega).unwrap();
        let m = info.to_moments(&JitterPolicy::default()).unwrap();
        assert_eq!(m.cov.as_matrix(), &m.cov.transpose());
    }

    #[test]
    fn mismatched_lengths_rejected() {
        assert!(GaussianMoments::new(Vector::zeros(2), SymMatrix::identity(3)).is_err());
        assert!(GaussianInfo::new(Vector::zeros(4), SymMatrix::identity(3)).is_err());
    }
}
