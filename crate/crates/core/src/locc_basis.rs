//! Locally distinguishable bases of `2 ⊗ n` subspaces.
//!
//! Given any orthonormal basis `{|φ_j>}` of the subspace and any qubit basis
//! `{|0'>, |1'>}`, write `|φ_j> = |0'>|ζ_0^j> + |1'>|ζ_1^j>` and collect the
//! `ζ_0^j` as the columns of `A` (n x d). With `A = W Λ V`, the rotation
//! `U = V†` makes the columns of `A U` pairwise orthogonal. The rotated basis
//! `|φ'_i> = Σ_j U[j][i] |φ_j>` then has orthogonal `η_0` components, and
//! orthogonality of the `|φ'_i>` forces the `η_1` components to be orthogonal
//! too. The qubit holder measures in `{|0'>, |1'>}` and the other party
//! finishes with a projective measurement.

use crate::bipartite::{self, computational_basis, decompose, PureState, Subspace};
use crate::error::{Error, Result};
use crate::linalg::{svd, CMatrix, C64};
use crate::protocol::{build_one_way_protocol, OneWayProtocol};

#[derive(Debug, Clone)]
pub struct RotationResult {
    /// The d x d unitary `U`; column `i` holds the coefficients of the new
    /// basis state `i` in the input basis.
    pub rotation: CMatrix,
    pub rotated_basis: Vec<PureState>,
    /// The qubit basis the rotation was built for.
    pub alice_basis: Vec<Vec<C64>>,
}

/// Rotates the basis of a `2 ⊗ n` subspace into a form the qubit holder can
/// start discriminating by measuring in `alice_basis` (computational when
/// `None`).
pub fn locc_basis(q: &Subspace, alice_basis: Option<&[Vec<C64>]>) -> Result<RotationResult> {
    if q.dim_a() != 2 {
        return Err(Error::QubitRequired(q.dim_a()));
    }
    let alice_basis = alice_basis.map_or_else(|| computational_basis(2), <[_]>::to_vec);
    let decomp = decompose(q.basis(), &alice_basis)?;

    let n = q.dim_b();
    let d = q.dim();
    let zeta0: Vec<Vec<C64>> = (0..d).map(|j| decomp.eta(j, 0).to_vec()).collect();
    let a = CMatrix::from_columns(n, &zeta0)?;
    let rotation = svd(&a)?.right.adjoint();

    let dim = 2 * n;
    let rotated_basis = (0..d)
        .map(|i| {
            let v: Vec<C64> = (0..dim)
                .map(|x| (0..d).map(|j| rotation[(j, i)] * q.basis()[j].vector()[x]).sum())
                .collect();
            PureState::from_vector_renormalized(2, n, v)
        })
        .collect();

    Ok(RotationResult {
        rotation,
        rotated_basis,
        alice_basis,
    })
}

/// Builds the one-way protocol for a rotated basis.
pub fn protocol_for(r: &RotationResult, tol: f64) -> Result<OneWayProtocol> {
    let decomp = decompose(&r.rotated_basis, &r.alice_basis)?;
    build_one_way_protocol(&decomp, tol)
}

/// Rotation, form check at `tol`, and protocol in one call.
pub fn locc_basis_with_protocol(
    q: &Subspace,
    alice_basis: Option<&[Vec<C64>]>,
    tol: f64,
) -> Result<(RotationResult, OneWayProtocol)> {
    let r = locc_basis(q, alice_basis)?;
    let p = protocol_for(&r, tol)?;
    Ok((r, p))
}

/// Projector distance between the input subspace and the span of the rotated
/// basis.
pub fn span_residual(q: &Subspace, r: &RotationResult) -> f64 {
    let vectors: Vec<Vec<C64>> = r.rotated_basis.iter().map(|s| s.vector().to_vec()).collect();
    let dim = q.dim_a() * q.dim_b();
    (&q.projector() - &bipartite::projector_of(&vectors, dim)).frobenius_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipartite::bell::*;
    use crate::bipartite::{haar_random_subspace, walgate_form_check};
    use crate::linalg::{basis_vector, haar_random_unitary, inner};
    use crate::protocol::{confusion_matrix, validate, verify_perfect};

    fn ket(a: usize, b: usize) -> PureState {
        PureState::product(&basis_vector(2, a), &basis_vector(2, b)).unwrap()
    }

    #[test]
    fn product_basis_is_already_in_form() {
        let q = Subspace::new(vec![ket(0, 0), ket(0, 1)]).unwrap();
        let r = locc_basis(&q, None).unwrap();
        assert!(r.rotation.unitarity_residual() < 1e-12);
        let check = walgate_form_check(&r.rotated_basis, &r.alice_basis, 1e-10).unwrap();
        assert!(check.passed);
        // The rotation can only rephase the input states.
        for i in 0..2 {
            let m = r.rotation.column(i).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!((m - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn phi_pair_rotates_to_product_states() {
        let q = Subspace::new(vec![phi_plus(), phi_minus()]).unwrap();
        let r = locc_basis(&q, None).unwrap();
        let check = walgate_form_check(&r.rotated_basis, &r.alice_basis, 1e-10).unwrap();
        assert!(check.passed, "{check:?}");
        // Each rotated state is |00> or |11> up to a phase, one of each.
        let mut found = [false; 2];
        for s in &r.rotated_basis {
            let o00 = inner(ket(0, 0).vector(), s.vector()).norm();
            let o11 = inner(ket(1, 1).vector(), s.vector()).norm();
            if (o00 - 1.0).abs() < 1e-12 {
                found[0] = true;
            }
            if (o11 - 1.0).abs() < 1e-12 {
                found[1] = true;
            }
        }
        assert_eq!(found, [true, true]);
        let p = protocol_for(&r, 1e-10).unwrap();
        assert!(verify_perfect(&p, &r.rotated_basis, 1e-12).unwrap());
    }

    #[test]
    fn rejects_non_qubit_first_party() {
        let q = haar_random_subspace(3, 3, 2, 0).unwrap();
        assert_eq!(locc_basis(&q, None).unwrap_err(), Error::QubitRequired(3));
    }

    #[test]
    fn random_two_by_five_dimension_seven() {
        let q = haar_random_subspace(2, 5, 7, 123).unwrap();
        let alice = haar_random_unitary(2, 124).columns();
        let (r, p) = locc_basis_with_protocol(&q, Some(&alice), 1e-10).unwrap();
        assert!(span_residual(&q, &r) <= 1e-10);
        assert!(validate(&p).passed);
        let cm = confusion_matrix(&p, &r.rotated_basis).unwrap();
        assert!(cm.min_diagonal() >= 1.0 - 1e-9);
    }

    #[test]
    fn full_space_and_rank_deficient_blocks() {
        // d = 2n forces Λ to have zero diagonal entries beyond rank n.
        for n in 1..=4 {
            let q = haar_random_subspace(2, n, 2 * n, n as u64).unwrap();
            let (r, p) = locc_basis_with_protocol(&q, None, 1e-10).unwrap();
            assert!(verify_perfect(&p, &r.rotated_basis, 1e-9).unwrap());
            let decomp = decompose(&r.rotated_basis, &r.alice_basis).unwrap();
            for i in 0..2 * n {
                let m = crate::linalg::norm(decomp.eta(i, 0)).max(crate::linalg::norm(decomp.eta(i, 1)));
                assert!(m > 0.0);
            }
        }
    }
}
