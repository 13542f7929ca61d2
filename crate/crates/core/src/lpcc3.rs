//! One-way projective protocols for three-dimensional subspaces that contain
//! a known product state.
//!
//! After local unitaries the product state is `|0>|0>`. The other two basis
//! states are rotated so that their `|0>`-components on the first party are
//! orthogonal, and the first party's remaining axes are then chosen (keeping
//! `|0>` fixed) so that the two states have orthogonal conditional states at
//! every other outcome. Outcome `0` leaves three mutually orthogonal states
//! for the second party; any other outcome leaves only two.

pub use crate::bipartite::ProductWitness;
use crate::bipartite::{computational_basis, decompose, PureState, Subspace};
use crate::error::{Error, Result};
use crate::linalg::{
    self, basis_vector, inner, kron_vec, norm, orthonormal_complete, project_out,
    random_unit_vector, seeded_rng, svd, CMatrix, C64, DERIVED_TOL,
};
use crate::protocol::{build_one_way_protocol, OneWayProtocol, Party};
use crate::zero_diag::{self, zero_diagonal_unitary};

#[derive(Debug, Clone)]
pub struct Lpcc3Result {
    /// Protocol in the original local frames; `first_party` is the party
    /// that measures first.
    pub protocol: OneWayProtocol,
    /// The distinguished basis of the subspace; the product state comes first.
    pub basis: Vec<PureState>,
    pub first_basis_residual: f64,
}

/// Unitary whose first column is the unit vector `v`.
fn unitary_with_first_column(v: &[C64]) -> Result<CMatrix> {
    let cols = orthonormal_complete(&[v.to_vec()], v.len(), DERIVED_TOL)?;
    CMatrix::from_columns(v.len(), &cols)
}

/// Builds the protocol with the subspace's first factor measuring first.
pub fn lpcc3_protocol(q: &Subspace, witness: &ProductWitness, tol: f64) -> Result<Lpcc3Result> {
    if q.dim() != 3 {
        return Err(Error::WrongDimension {
            what: "subspace dimension",
            expected: 3,
            found: q.dim(),
        });
    }
    witness.validate(q, DERIVED_TOL)?;
    let (m, n) = (q.dim_a(), q.dim_b());

    // (1) local frames in which the witness is |0>|0>
    let ua = unitary_with_first_column(&witness.alice)?;
    let ub = unitary_with_first_column(&witness.bob)?;
    let (ua_h, ub_h) = (ua.adjoint(), ub.adjoint());
    let local: Vec<Vec<C64>> = q
        .basis()
        .iter()
        .map(|s| s.apply_local(&ua_h, &ub_h).vector().to_vec())
        .collect();

    // (2) orthonormal basis {|00>, φ2, φ3} of the subspace
    let e00 = kron_vec(&basis_vector(m, 0), &basis_vector(n, 0));
    let mut rest: Vec<Vec<C64>> = local
        .iter()
        .map(|v| {
            let mut r = v.clone();
            project_out(&mut r, std::slice::from_ref(&e00));
            r
        })
        .collect();
    // The residuals span the two-dimensional complement of |00>.
    rest.sort_by(|a, b| norm(b).total_cmp(&norm(a)));
    let mut tail: Vec<Vec<C64>> = Vec::with_capacity(2);
    for v in rest {
        if tail.len() == 2 {
            break;
        }
        let mut r = v;
        project_out(&mut r, &tail);
        project_out(&mut r, std::slice::from_ref(&e00));
        let nr = norm(&r);
        if nr > 1e-6 {
            tail.push(r.into_iter().map(|z| z / nr).collect());
        }
    }
    if tail.len() < 2 {
        return Err(Error::RankDeficient { index: tail.len() + 1 });
    }

    // (3) rotate {φ2, φ3} so their first-party |0> components are orthogonal
    let a = CMatrix::from_columns(n, &tail.iter().map(|v| v[..n].to_vec()).collect::<Vec<_>>())?;
    let u = svd(&a)?.right.adjoint();
    let rotated: Vec<Vec<C64>> = (0..2)
        .map(|i| {
            (0..m * n)
                .map(|x| u[(0, i)] * tail[0][x] + u[(1, i)] * tail[1][x])
                .collect()
        })
        .collect();
    let phi2 = PureState::from_vector_renormalized(m, n, rotated[0].clone());
    let phi3 = PureState::from_vector_renormalized(m, n, rotated[1].clone());

    // (4) first-party basis keeping |0>, with orthogonal residuals elsewhere
    let overlap = zero_diag::overlap_matrix(&phi2, &phi3);
    let zd = zero_diagonal_unitary(&overlap, 1, tol, zero_diag::DEFAULT_MAX_ITER)?;
    let alice_local: Vec<Vec<C64>> = zd
        .unitary
        .columns()
        .into_iter()
        .map(|c| c.into_iter().map(|z| z.conj()).collect())
        .collect();

    // (5) protocol on {|00>, φ2, φ3}
    let phi1 = PureState::from_vector_renormalized(m, n, e00);
    let local_states = [phi1, phi2, phi3];
    let decomp = decompose(&local_states, &alice_local)?;
    let check = decomp.form_check(tol);
    if !check.passed {
        return Err(Error::FormCheckFailed {
            residual: check.worst_residual,
        });
    }
    let local_protocol = build_one_way_protocol(&decomp, tol)?;

    let protocol = local_protocol.conjugated(&ua, &ub);
    let basis = local_states.iter().map(|s| s.apply_local(&ua, &ub)).collect();
    Ok(Lpcc3Result {
        protocol,
        basis,
        first_basis_residual: linalg::orthonormality_residual(&alice_local)?,
    })
}

/// The subspace with the two parties exchanged.
pub fn swap_roles(q: &Subspace) -> Subspace {
    Subspace::new(q.basis().iter().map(PureState::swapped).collect())
        .expect("transposition preserves orthonormality")
}

/// Runs [`lpcc3_protocol`] on the swapped subspace and maps the result back:
/// the returned protocol has the second factor measuring first and applies to
/// states of the original subspace.
pub fn lpcc3_protocol_second_first(
    q: &Subspace,
    witness: &ProductWitness,
    tol: f64,
) -> Result<Lpcc3Result> {
    let r = lpcc3_protocol(&swap_roles(q), &witness.swapped(), tol)?;
    Ok(Lpcc3Result {
        protocol: r.protocol.with_first_party(Party::B),
        basis: r.basis.iter().map(PureState::swapped).collect(),
        first_basis_residual: r.first_basis_residual,
    })
}

const WITNESS_SWEEPS: usize = 5000;

/// Searches for a product state in `q` by alternating maximization of
/// `‖P (a ⊗ b)‖` from `attempts` random starts. Each step replaces `a ⊗ b` by
/// the best product approximation of its projection onto `q`, which never
/// decreases the objective. Failure is not evidence that no product state
/// exists.
pub fn find_product_witness(q: &Subspace, attempts: usize, seed: u64) -> Result<ProductWitness> {
    let mut rng = seeded_rng(seed);
    let (m, n) = (q.dim_a(), q.dim_b());

    // Cheap first pass: basis members that already are product states.
    for s in q.basis() {
        if let Ok(w) = ProductWitness::from_state(s, 1e-12) {
            if w.validate(q, DERIVED_TOL).is_ok() {
                return Ok(w);
            }
        }
    }

    for _ in 0..attempts {
        let mut alice = random_unit_vector(&mut rng, m);
        let mut bob = random_unit_vector(&mut rng, n);
        for _ in 0..WITNESS_SWEEPS {
            let w = kron_vec(&alice, &bob);
            let p = q.project(&w);
            let residual = norm(&w.iter().zip(&p).map(|(x, y)| x - y).collect::<Vec<_>>());
            if residual <= 1e-12 {
                break;
            }
            let s = svd(&CMatrix::from_row_major(m, n, p)?)?;
            alice = s.left.column(0);
            bob = s.right.row(0);
            // The start was orthogonal to the subspace; try another.
            if s.singulars[0] == 0.0 {
                alice = random_unit_vector(&mut rng, m);
                bob = random_unit_vector(&mut rng, n);
            }
        }
        let candidate = ProductWitness { alice, bob };
        if candidate.validate(q, DERIVED_TOL).is_ok() {
            return Ok(candidate);
        }
    }
    Err(Error::WitnessNotFound { attempts })
}

/// Largest overlap `|<0|η_0^i>|` of the rotated pair with the witness axis,
/// and `|<η_0^2|η_0^3>|`, in the local frame of the witness. Exposed for
/// invariant tests.
pub fn step_three_residuals(q: &Subspace, witness: &ProductWitness, tol: f64) -> Result<(f64, f64)> {
    let r = lpcc3_protocol(q, witness, tol)?;
    let ua = unitary_with_first_column(&witness.alice)?;
    let ub = unitary_with_first_column(&witness.bob)?;
    let local: Vec<PureState> = r
        .basis
        .iter()
        .map(|s| s.apply_local(&ua.adjoint(), &ub.adjoint()))
        .collect();
    let decomp = decompose(&local, &computational_basis(q.dim_a()))?;
    let e0 = basis_vector(q.dim_b(), 0);
    let axis = inner(&e0, decomp.eta(1, 0)).norm().max(inner(&e0, decomp.eta(2, 0)).norm());
    let pair = inner(decomp.eta(1, 0), decomp.eta(2, 0)).norm();
    Ok((axis, pair))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipartite::bell::*;
    use crate::bipartite::{planted_product_subspace, subspace_from_vectors};
    use crate::protocol::{confusion_matrix, validate};

    fn ket(a: usize, b: usize) -> PureState {
        PureState::product(&basis_vector(2, a), &basis_vector(2, b)).unwrap()
    }

    fn zero_witness(m: usize, n: usize) -> ProductWitness {
        ProductWitness::new(basis_vector(m, 0), basis_vector(n, 0)).unwrap()
    }

    #[test]
    fn product_basis_two_by_two() {
        let q = Subspace::new(vec![ket(0, 0), ket(0, 1), ket(1, 0)]).unwrap();
        let r = lpcc3_protocol(&q, &zero_witness(2, 2), 1e-10).unwrap();
        assert!(validate(&r.protocol).passed);
        let cm = confusion_matrix(&r.protocol, &r.basis).unwrap();
        assert!(cm.distance_from_identity() <= 1e-9);
    }

    #[test]
    fn bell_like_pair_with_product_state() {
        let q = Subspace::new(vec![ket(0, 0), psi_plus(), psi_minus()]).unwrap();
        let r = lpcc3_protocol(&q, &zero_witness(2, 2), 1e-10).unwrap();
        let cm = confusion_matrix(&r.protocol, &r.basis).unwrap();
        assert!(cm.distance_from_identity() <= 1e-9, "{cm:?}");
        // The first-party basis keeps |0>.
        assert!((r.protocol.first_basis[0][0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn planted_instances_both_orders() {
        for seed in 0..12 {
            let (m, n) = (3 + (seed % 3) as usize, 3 + (seed / 3 % 3) as usize);
            let (q, w) = planted_product_subspace(m, n, seed).unwrap();
            let r = lpcc3_protocol(&q, &w, 1e-10).unwrap();
            assert!(validate(&r.protocol).passed);
            let cm = confusion_matrix(&r.protocol, &r.basis).unwrap();
            assert!(cm.min_diagonal() >= 1.0 - 1e-9, "seed {seed}: {cm:?}");
            let rs = lpcc3_protocol_second_first(&q, &w, 1e-10).unwrap();
            assert_eq!(rs.protocol.first_party, Party::B);
            let cm = confusion_matrix(&rs.protocol, &rs.basis).unwrap();
            assert!(cm.min_diagonal() >= 1.0 - 1e-9, "swapped seed {seed}: {cm:?}");
            // The distinguished basis spans the input subspace.
            let span = Subspace::new(r.basis.clone()).unwrap();
            assert!(span.projector_distance(&q) <= 1e-10);
        }
    }

    #[test]
    fn outcomes_after_zero_exclude_product_state() {
        let (q, w) = planted_product_subspace(4, 3, 9).unwrap();
        let r = lpcc3_protocol(&q, &w, 1e-10).unwrap();
        let decomp = decompose(&r.basis, &r.protocol.first_basis).unwrap();
        for a in 1..4 {
            assert!(norm(decomp.eta(0, a)) <= 1e-10);
        }
        let (axis, pair) = step_three_residuals(&q, &w, 1e-10).unwrap();
        assert!(axis <= 1e-10 && pair <= 1e-10);
    }

    #[test]
    fn rejects_wrong_dimension_and_bad_witness() {
        let q = Subspace::new(vec![ket(0, 0), ket(0, 1)]).unwrap();
        assert!(matches!(
            lpcc3_protocol(&q, &zero_witness(2, 2), 1e-10),
            Err(Error::WrongDimension { found: 2, .. })
        ));
        let q = Subspace::new(vec![ket(0, 1), ket(1, 0), ket(1, 1)]).unwrap();
        assert!(matches!(
            lpcc3_protocol(&q, &zero_witness(2, 2), 1e-10),
            Err(Error::NotInSubspace { .. })
        ));
    }

    #[test]
    fn swap_roles_cases() {
        let (q, _) = planted_product_subspace(3, 4, 1).unwrap();
        assert_eq!(swap_roles(&swap_roles(&q)), q);
        let s = swap_roles(&Subspace::new(vec![phi_plus()]).unwrap());
        assert_eq!(s.basis()[0], phi_plus());
        assert_eq!((swap_roles(&q).dim_a(), swap_roles(&q).dim_b()), (4, 3));
    }

    #[test]
    fn witness_search() {
        let q = Subspace::new(vec![ket(0, 0), psi_plus(), psi_minus()]).unwrap();
        let w = find_product_witness(&q, 5, 0).unwrap();
        w.validate(&q, 1e-10).unwrap();

        let (q, _) = planted_product_subspace(3, 3, 4).unwrap();
        let w = find_product_witness(&q, 50, 1).unwrap();
        assert!(q.projection_residual(w.state().vector()) <= 1e-8);

        let singlet = Subspace::new(vec![psi_minus()]).unwrap();
        assert_eq!(
            find_product_witness(&singlet, 3, 2).unwrap_err(),
            Error::WitnessNotFound { attempts: 3 }
        );
    }

    #[test]
    fn witness_inside_non_orthonormal_input() {
        let v = vec![
            ket(0, 0).vector().to_vec(),
            vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 1.0)],
        ];
        let q = subspace_from_vectors(&v, 2, 2).unwrap();
        let r = lpcc3_protocol(&q, &zero_witness(2, 2), 1e-10).unwrap();
        let cm = confusion_matrix(&r.protocol, &r.basis).unwrap();
        assert!(cm.min_diagonal() >= 1.0 - 1e-9);
    }
}
