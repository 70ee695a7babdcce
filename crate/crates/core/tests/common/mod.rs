#![allow(dead_code)]

use crmgp_core::kernels::{LmcParams, Matern32};
use crmgp_core::linalg::SymMatrix;
use crmgp_core::points::PointSet;
use crmgp_core::{Matrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize) -> PointSet {
    let coords = (0..2 * n).map(|_| rng.random::<f64>()).collect();
    PointSet::new(2, coords).unwrap()
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect()
}

/// Correlated two-output LMC kernel with two latent components.
pub fn correlated_kernel(rng: &mut ChaCha8Rng) -> LmcParams {
    let l1 = 0.2 + 0.2 * rng.random::<f64>();
    let l2 = 0.1 + 0.2 * rng.random::<f64>();
    LmcParams::new(
        vec![Matern32::new(1.0, l1).unwrap(), Matern32::new(0.5, l2).unwrap()],
        vec![vec![1.0, 0.3 + 0.4 * rng.random::<f64>()], vec![-0.2, 0.9]],
    )
    .unwrap()
}

/// Random SPD matrix `Q diag(λ) Qᵀ` with `λ` log-uniform in `[1, cond]`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, cond: f64) -> SymMatrix {
    let a = Matrix::from_fn(n, n, |_, _| 2.0 * rng.random::<f64>() - 1.0);
    let q = a.qr().q();
    let lambdas: Vec<f64> = (0..n)
        .map(|i| {
            let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
            cond.powf(t)
        })
        .collect();
    let d = Matrix::from_diagonal(&Vector::from_vec(lambdas));
    SymMatrix::symmetrized(&q * d * q.transpose())
}

pub fn max_abs(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).abs().max()
}

pub fn max_abs_vec(a: &Vector, b: &Vector) -> f64 {
    (a - b).abs().max()
}
