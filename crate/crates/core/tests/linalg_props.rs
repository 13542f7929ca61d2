use locc_core::linalg::{gram, haar_random_unitary, partial_trace_env, svd};
use locc_core::{CMatrix, C64};
use proptest::prelude::*;

fn matrix(max: usize) -> impl Strategy<Value = CMatrix> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), r * c).prop_map(move |xs| {
            let data = xs.into_iter().map(|(a, b)| C64::new(a, b)).collect();
            CMatrix::from_row_major(r, c, data).unwrap()
        })
    })
}

fn density(dim: usize, seed: u64) -> CMatrix {
    let u = haar_random_unitary(dim, seed);
    let weights: Vec<f64> = (0..dim).map(|i| 1.0 + ((seed >> i) & 3) as f64).collect();
    let total: f64 = weights.iter().sum();
    let d = CMatrix::diag(&weights.iter().map(|w| C64::new(w / total, 0.0)).collect::<Vec<_>>());
    &(&u * &d) * &u.adjoint()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn svd_reconstructs_with_unitary_factors(a in matrix(12)) {
        let s = svd(&a).unwrap();
        let scale = a.frobenius_norm().max(1.0);
        prop_assert!((&s.reconstruct() - &a).frobenius_norm() <= 1e-10 * scale);
        prop_assert!(s.left.unitarity_residual() <= 1e-10);
        prop_assert!(s.right.unitarity_residual() <= 1e-10);
        prop_assert!(s.singulars.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(s.singulars.iter().all(|&x| x >= 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gram_of_unitary_columns_is_identity(dim in 1usize..10, seed in any::<u64>()) {
        let g = gram(&haar_random_unitary(dim, seed).columns()).unwrap();
        prop_assert!((&g - &CMatrix::identity(dim)).max_abs() <= 1e-12);
    }

    #[test]
    fn partial_trace_keeps_trace_and_mixing(
        out_dim in 1usize..5,
        seed in any::<u64>(),
        p in 0.0f64..1.0,
    ) {
        let dim = 2 * out_dim;
        let (r1, r2) = (density(dim, seed), density(dim, seed ^ 0x5555));
        let t1 = partial_trace_env(&r1, 2).unwrap();
        prop_assert!((t1.trace() - r1.trace()).norm() <= 1e-12);

        let w = C64::new(p, 0.0);
        let mixed = &r1.scale(w) + &r2.scale(C64::new(1.0, 0.0) - w);
        let t2 = partial_trace_env(&r2, 2).unwrap();
        let lhs = partial_trace_env(&mixed, 2).unwrap();
        let rhs = &t1.scale(w) + &t2.scale(C64::new(1.0, 0.0) - w);
        prop_assert!((&lhs - &rhs).max_abs() <= 1e-12);
    }
}
