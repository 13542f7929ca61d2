use locc_core::bipartite::{decompose, haar_random_subspace, planted_product_subspace, walgate_form_check, PureState};
use locc_core::linalg::{haar_random_unitary, norm};
use locc_core::locc_basis::{locc_basis, locc_basis_with_protocol, span_residual};
use locc_core::lpcc3::{lpcc3_protocol, lpcc3_protocol_second_first, step_three_residuals};
use locc_core::protocol::{confusion_matrix, Label, OneWayProtocol};
use locc_core::suite::perturb_second_measurement;
use locc_core::zero_diag::{equalize_pair, two_state_protocol, zero_diagonal_unitary, DEFAULT_MAX_ITER};
use locc_core::{CMatrix, C64};
use proptest::prelude::*;

fn random_states(m: usize, n: usize, count: usize, seed: u64) -> Vec<PureState> {
    (0..count)
        .map(|i| {
            let v = haar_random_unitary(m * n, seed.wrapping_add(i as u64)).column(0);
            PureState::from_vector(m, n, v).unwrap()
        })
        .collect()
}

fn relabel(p: &OneWayProtocol, perm: &[usize]) -> OneWayProtocol {
    let mut q = p.clone();
    for lv in q.second.iter_mut().flatten() {
        if let Label::State(i) = lv.label {
            lv.label = Label::State(perm[i]);
        }
    }
    q
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decompose_then_reassemble(m in 1usize..5, n in 1usize..5, count in 1usize..5, seed in any::<u64>()) {
        let states = random_states(m, n, count, seed);
        let basis = haar_random_unitary(m, seed ^ 1).columns();
        let d = decompose(&states, &basis).unwrap();
        for (i, s) in states.iter().enumerate() {
            let back = d.reassemble(i);
            let err = back.iter().zip(s.vector()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            prop_assert!(err <= 1e-12);
        }
    }

    #[test]
    fn form_check_ignores_phases_and_order(n in 2usize..6, d in 2usize..6, seed in any::<u64>(), angle in 0.0f64..6.3) {
        let q = haar_random_subspace(2, n, d.min(2 * n), seed).unwrap();
        let alice = haar_random_unitary(2, seed ^ 7).columns();
        let r = locc_basis(&q, Some(&alice)).unwrap();
        for states in [q.basis().to_vec(), r.rotated_basis.clone()] {
            let base = walgate_form_check(&states, &alice, 1e-10).unwrap();
            let phased: Vec<PureState> = states
                .iter()
                .enumerate()
                .map(|(i, s)| s.with_phase(C64::from_polar(1.0, angle * (i + 1) as f64)))
                .collect();
            let mut reversed = states.clone();
            reversed.reverse();
            for other in [phased, reversed] {
                let c = walgate_form_check(&other, &alice, 1e-10).unwrap();
                prop_assert_eq!(c.passed, base.passed);
                prop_assert!((c.worst_residual - base.worst_residual).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn rotation_preserves_span_and_composes(n in 1usize..8, seed in any::<u64>(), frac in 0.0f64..1.0) {
        let d = 1 + ((2 * n - 1) as f64 * frac) as usize;
        let q = haar_random_subspace(2, n, d, seed).unwrap();
        let alice = haar_random_unitary(2, seed ^ 3).columns();
        let (r, p) = locc_basis_with_protocol(&q, Some(&alice), 1e-10).unwrap();
        prop_assert!(span_residual(&q, &r) <= 1e-10);
        let cm = confusion_matrix(&p, &r.rotated_basis).unwrap();
        prop_assert!(cm.distance_from_identity() <= 1e-9);
        prop_assert!(cm.stochasticity_residual() <= 1e-12);
        let decomp = decompose(&r.rotated_basis, &alice).unwrap();
        for i in 0..d {
            prop_assert!(norm(decomp.eta(i, 0)).max(norm(decomp.eta(i, 1))) > 0.0);
        }
    }

    #[test]
    fn confusion_rows_are_stochastic_and_relabel(n in 2usize..5, seed in any::<u64>(), shift in 0usize..4) {
        let d = n;
        let q = haar_random_subspace(2, n, d, seed).unwrap();
        let (r, p) = locc_basis_with_protocol(&q, None, 1e-10).unwrap();
        // A perturbed protocol gives a nontrivial matrix to permute.
        let p = perturb_second_measurement(&p, 0, 0.3);
        let perm: Vec<usize> = (0..d).map(|i| (i + shift) % d).collect();
        let mut permuted_states = r.rotated_basis.clone();
        for (i, s) in r.rotated_basis.iter().enumerate() {
            permuted_states[perm[i]] = s.clone();
        }
        let a = confusion_matrix(&p, &r.rotated_basis).unwrap();
        let b = confusion_matrix(&relabel(&p, &perm), &permuted_states).unwrap();
        prop_assert!(a.stochasticity_residual() <= 1e-12);
        for i in 0..d {
            for j in 0..d {
                prop_assert!((a.rows[i][j] - b.rows[perm[i]][perm[j]]).abs() <= 1e-12);
            }
            prop_assert!((a.reject(i) - b.reject(perm[i])).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_diagonal_descends_and_keeps_trace(n in 2usize..13, seed in any::<u64>()) {
        let u = haar_random_unitary(n, seed);
        let ev: Vec<C64> = (0..n).map(|i| C64::new(i as f64 - (n - 1) as f64 / 2.0, ((seed >> i) & 1) as f64)).collect();
        let shift = ev.iter().sum::<C64>() / n as f64;
        let ev: Vec<C64> = ev.into_iter().map(|z| z - shift).collect();
        let m = &(&u * &CMatrix::diag(&ev)) * &u.adjoint();
        let r = zero_diagonal_unitary(&m, 0, 1e-10, DEFAULT_MAX_ITER).unwrap();
        prop_assert!(r.residual <= 1e-10);
        prop_assert!(r.deviation_history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!((r.transformed.trace() - m.trace()).norm() <= 1e-12 * m.frobenius_norm().max(1.0));
    }

    #[test]
    fn equalize_pair_is_unitary(x in prop::array::uniform8(-1.0f64..1.0)) {
        let b = CMatrix::from_row_major(2, 2, vec![
            C64::new(x[0], x[1]), C64::new(x[2], x[3]),
            C64::new(x[4], x[5]), C64::new(x[6], x[7]),
        ]).unwrap();
        let g = equalize_pair(&b);
        prop_assert!(g.unitarity_residual() <= 1e-14);
        let t = &(&g.adjoint() * &b) * &g;
        prop_assert!((t[(0, 0)] - t[(1, 1)]).norm() <= 1e-12 * b.frobenius_norm().max(1.0));
    }

    #[test]
    fn two_state_survives_local_unitaries(m in 2usize..5, n in 2usize..5, seed in any::<u64>()) {
        let q = haar_random_subspace(m, n, 2, seed).unwrap();
        let (ua, ub) = (haar_random_unitary(m, seed ^ 11), haar_random_unitary(n, seed ^ 13));
        let moved: Vec<PureState> = q.basis().iter().map(|s| s.apply_local(&ua, &ub)).collect();
        let r = two_state_protocol(&moved[0], &moved[1], false, 1e-10).unwrap();
        let cm = confusion_matrix(&r.protocol, &moved).unwrap();
        prop_assert!(cm.distance_from_identity() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn planted_instances_decode_in_both_orders(m in 3usize..6, n in 3usize..6, seed in any::<u64>()) {
        let (q, w) = planted_product_subspace(m, n, seed).unwrap();
        let (axis, pair) = step_three_residuals(&q, &w, 1e-10).unwrap();
        prop_assert!(axis <= 1e-10 && pair <= 1e-10);

        let a = lpcc3_protocol(&q, &w, 1e-10).unwrap();
        let ca = confusion_matrix(&a.protocol, &a.basis).unwrap();
        prop_assert!(ca.min_diagonal() >= 1.0 - 1e-9);
        // The product state only ever triggers the first outcome.
        let d = decompose(&a.basis, &a.protocol.first_basis).unwrap();
        for k in 1..m {
            prop_assert!(norm(d.eta(0, k)) <= 1e-10);
        }

        let b = lpcc3_protocol_second_first(&q, &w, 1e-10).unwrap();
        let cb = confusion_matrix(&b.protocol, &b.basis).unwrap();
        prop_assert!(cb.min_diagonal() >= 1.0 - 1e-9);
    }
}
