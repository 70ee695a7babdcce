//! Predictive accuracy and calibration metrics over a test set.
//!
//! All metrics act on per-point marginal predictions and sum in test-point order.
//! RMSE is pooled over every (point, output) entry.

use alloc::vec::Vec;

use crate::gaussian::GaussianMoments;
use crate::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Per-point, per-output predictive means and variances, point-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalPredictions {
    output_dim: usize,
    mean: Vec<f64>,
    var: Vec<f64>,
}

impl MarginalPredictions {
    pub fn new(output_dim: usize, mean: Vec<f64>, var: Vec<f64>) -> Result<Self> {
        if output_dim == 0 {
            return Err(Error::InvalidParameter("output dimension must be positive"));
        }
        if mean.len() != var.len() {
            return Err(Error::DimensionMismatch { expected: mean.len(), found: var.len() });
        }
        if !mean.len().is_multiple_of(output_dim) {
            return Err(Error::DimensionMismatch { expected: output_dim, found: mean.len() % output_dim });
        }
        if mean.iter().chain(&var).any(|v| !v.is_finite()) {
            return Err(Error::NonFinitePrediction);
        }
        Ok(MarginalPredictions { output_dim, mean, var })
    }

    /// Marginals of a joint Gaussian over `p·D` stacked outputs.
    pub fn from_moments(g: &GaussianMoments, output_dim: usize) -> Result<Self> {
        let var = g.cov.diagonal().iter().copied().collect();
        MarginalPredictions::new(output_dim, g.mean.iter().copied().collect(), var)
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn num_points(&self) -> usize {
        self.mean.len() / self.output_dim
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn var(&self) -> &[f64] {
        &self.var
    }

    pub fn with_added_variance(mut self, noise: f64) -> Self {
        for v in &mut self.var {
            *v += noise;
        }
        self
    }

    fn check_targets(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.mean.len() {
            return Err(Error::DimensionMismatch { expected: self.mean.len(), found: y.len() });
        }
        if self.mean.is_empty() {
            return Err(Error::InvalidParameter("empty test set"));
        }
        Ok(())
    }
}

/// Mean negative log predictive density per output, from marginal variances.
pub fn nlpd(pred: &MarginalPredictions, y: &[f64]) -> Result<Vec<f64>> {
    pred.check_targets(y)?;
    let d = pred.output_dim;
    let n = pred.num_points();
    let mut totals = alloc::vec![0.0; d];
    for i in 0..n {
        for (out, total) in totals.iter_mut().enumerate() {
            let k = i * d + out;
            let var = pred.var[k];
            if !(var > 0.0) {
                return Err(Error::NonPositiveVariance(var));
            }
            let r = y[k] - pred.mean[k];
            *total += 0.5 * (LN_2PI + libm::log(var) + r * r / var);
        }
    }
    Ok(totals.into_iter().map(|t| t / n as f64).collect())
}

/// Percentage of targets inside the central `level` interval, per output.
pub fn ci_coverage(pred: &MarginalPredictions, y: &[f64], level: f64) -> Result<Vec<f64>> {
    pred.check_targets(y)?;
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter("confidence level must lie in (0, 1)"));
    }
    let z = normal_quantile(0.5 + 0.5 * level);
    let d = pred.output_dim;
    let n = pred.num_points();
    let mut hits = alloc::vec![0usize; d];
    for i in 0..n {
        for (out, hit) in hits.iter_mut().enumerate() {
            let k = i * d + out;
            let half_width = z * libm::sqrt(pred.var[k].max(0.0));
            if (y[k] - pred.mean[k]).abs() <= half_width {
                *hit += 1;
            }
        }
    }
    Ok(hits.into_iter().map(|h| 100.0 * h as f64 / n as f64).collect())
}

/// Root mean squared error pooled over all points and outputs.
pub fn rmse(mean: &[f64], y: &[f64]) -> Result<f64> {
    if mean.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: mean.len(), found: y.len() });
    }
    if mean.is_empty() {
        return Err(Error::InvalidParameter("empty test set"));
    }
    let sse: f64 = mean.iter().zip(y).map(|(m, t)| (m - t) * (m - t)).sum();
    Ok(libm::sqrt(sse / mean.len() as f64))
}

/// Euclidean error of the predicted vector at each grid cell.
pub fn error_grid(pred_mean: &[f64], truth: &[f64], output_dim: usize) -> Result<Vec<f64>> {
    if pred_mean.len() != truth.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), found: pred_mean.len() });
    }
    if output_dim == 0 || !truth.len().is_multiple_of(output_dim) {
        return Err(Error::InvalidParameter("grid length is not a multiple of the output dimension"));
    }
    Ok(pred_mean
        .chunks_exact(output_dim)
        .zip(truth.chunks_exact(output_dim))
        .map(|(p, t)| libm::sqrt(p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum()))
        .collect())
}

/// One model's row of test metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub nlpd_per_output: Vec<f64>,
    pub ci95_coverage_per_output: Vec<f64>,
    pub rmse: f64,
    pub n_test: usize,
}

impl EvalReport {
    /// `pred` should already include observation noise in its variances.
    pub fn evaluate(pred: &MarginalPredictions, y: &[f64]) -> Result<Self> {
        Ok(EvalReport {
            nlpd_per_output: nlpd(pred, y)?,
            ci95_coverage_per_output: ci_coverage(pred, y, 0.95)?,
            rmse: rmse(pred.mean(), y)?,
            n_test: pred.num_points(),
        })
    }
}

/// Inverse of the standard normal CDF.
///
/// Acklam's rational approximation followed by one Halley step against `erfc`,
/// giving close to full double precision on (0, 1).
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] =
        [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];
    const P_LOW: f64 = 0.024_25;

    let x = if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = 0.5 * libm::erfc(-x / core::f64::consts::SQRT_2) - p;
    let u = e * libm::sqrt(2.0 * core::f64::consts::PI) * libm::exp(0.5 * x * x);
    x - u / (1.0 + 0.5 * x * u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_predictions_rejected() {
        let r = MarginalPredictions::new(1, alloc::vec![f64::NAN], alloc::vec![1.0]);
        assert_eq!(r, Err(Error::NonFinitePrediction));
        let r = MarginalPredictions::new(1, alloc::vec![0.0], alloc::vec![f64::INFINITY]);
        assert_eq!(r, Err(Error::NonFinitePrediction));
    }
    use alloc::vec;

    fn pred(mean: Vec<f64>, var: Vec<f64>) -> MarginalPredictions {
        MarginalPredictions::new(2, mean, var).unwrap()
    }

    #[test]
    fn nlpd_zero_at_unit_density() {
        let v = 1.0 / (2.0 * core::f64::consts::PI);
        let p = pred(vec![0.3, -0.1, 1.0, 2.0], vec![v; 4]);
        for x in nlpd(&p, &[0.3, -0.1, 1.0, 2.0]).unwrap() {
            assert!(x.abs() < 1e-9);
        }
    }

    #[test]
    fn nlpd_standard_normal_mode() {
        let p = pred(vec![0.0; 4], vec![1.0; 4]);
        for x in nlpd(&p, &[0.0; 4]).unwrap() {
            assert!((x - 0.918_938_533_204_672_7).abs() < 1e-9);
        }
    }

    #[test]
    fn nlpd_variance_inflation_adds_ln2() {
        let y = [0.0; 4];
        let base = nlpd(&pred(vec![0.0; 4], vec![0.3, 0.7, 1.1, 0.2]), &y).unwrap();
        let wide = nlpd(&pred(vec![0.0; 4], vec![1.2, 2.8, 4.4, 0.8]), &y).unwrap();
        for (a, b) in base.iter().zip(&wide) {
            assert!((b - a - core::f64::consts::LN_2).abs() < 1e-9);
        }
    }

    #[test]
    fn nlpd_rejects_nonpositive_variance() {
        let p = pred(vec![0.0; 2], vec![1.0, 0.0]);
        assert!(matches!(nlpd(&p, &[0.0, 0.0]), Err(Error::NonPositiveVariance(_))));
    }

    #[test]
    fn coverage_extremes() {
        let p = pred(vec![1.0, 2.0, 3.0, 4.0], vec![0.5; 4]);
        assert_eq!(ci_coverage(&p, &[1.0, 2.0, 3.0, 4.0], 0.95).unwrap(), vec![100.0, 100.0]);
        let tight = pred(vec![1.0, 2.0, 3.0, 4.0], vec![1e-300; 4]);
        assert_eq!(ci_coverage(&tight, &[1.1, 2.1, 3.1, 4.1], 0.95).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn rmse_cases() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[1.0, 2.0, 3.0], &[1.25, 1.75, 3.25]).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn error_grid_norms() {
        let e = error_grid(&[0.0, 0.0, 1.0, 1.0], &[3.0, 4.0, 1.0, 1.0], 2).unwrap();
        assert_eq!(e, vec![5.0, 0.0]);
    }

    #[test]
    fn quantile_reference_values() {
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!(normal_quantile(0.5).abs() < 1e-15);
        assert!((normal_quantile(0.01) + 2.326_347_874_040_841).abs() < 1e-12);
        assert!((normal_quantile(0.999) - 3.090_232_306_167_813_5).abs() < 1e-11);
    }
}
