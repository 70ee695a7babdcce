mod common;

use common::*;
use crmgp_core::linalg::{cholesky_psd, JitterPolicy};
use crmgp_core::points::PointSet;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gram_is_symmetric_psd(seed in any::<u64>(), n in 1usize..50) {
        let mut r = rng(seed);
        let k = correlated_kernel(&mut r);
        let x = random_points(&mut r, n);
        let g = k.gram_sym(&x);
        let full = k.gram(&x, &x).unwrap();
        prop_assert!(max_abs(&full, g.as_matrix()) <= 1e-15);
        let min_eig = g.eigenvalues()[0];
        prop_assert!(min_eig >= -1e-10 * g.mean_diagonal(), "min eigenvalue {}", min_eig);
        // PSD up to the first rung of the jitter ladder
        let policy = JitterPolicy { scale: 1e-10, max_decades: 0 };
        prop_assert!(cholesky_psd(&g, &policy).is_ok());
    }

    #[test]
    fn block_transpose_symmetry(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = correlated_kernel(&mut r);
        let a = [r.random::<f64>(), r.random::<f64>()];
        let b = [r.random::<f64>(), r.random::<f64>()];
        prop_assert!(max_abs(&k.block(&a, &b), &k.block(&b, &a).transpose()) <= 1e-15);
    }

    #[test]
    fn cross_gram_transpose(seed in any::<u64>(), n in 1usize..20, m in 1usize..20) {
        let mut r = rng(seed);
        let k = correlated_kernel(&mut r);
        let x = random_points(&mut r, n);
        let y = random_points(&mut r, m);
        let kxy = k.gram(&x, &y).unwrap();
        prop_assert_eq!(kxy.shape(), (2 * n, 2 * m));
        prop_assert!(max_abs(&kxy, &k.gram(&y, &x).unwrap().transpose()) <= 1e-15);
        // block layout: row i*D + a, column j*D + b
        let (i, j) = (n - 1, m - 1);
        let block = k.block(x.point(i), y.point(j));
        for a in 0..2 {
            for b in 0..2 {
                prop_assert_eq!(kxy[(2 * i + a, 2 * j + b)], block[(a, b)]);
            }
        }
    }

    #[test]
    fn stationarity(seed in any::<u64>(), tx in -5.0f64..5.0, ty in -5.0f64..5.0) {
        let mut r = rng(seed);
        let k = correlated_kernel(&mut r);
        let a = [r.random::<f64>(), r.random::<f64>()];
        let b = [r.random::<f64>(), r.random::<f64>()];
        let shifted = k.block(&[a[0] + tx, a[1] + ty], &[b[0] + tx, b[1] + ty]);
        prop_assert!(max_abs(&shifted, &k.block(&a, &b)) <= 1e-12);
    }
}

#[test]
fn point_set_dimension_checked() {
    let mut r = rng(0);
    let k = correlated_kernel(&mut r);
    let x = random_points(&mut r, 3);
    let z = PointSet::new(1, vec![0.0, 1.0]).unwrap();
    assert!(k.gram(&x, &z).is_err());
}
