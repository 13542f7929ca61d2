//! One-way local projective protocols and their exact evaluation.
//!
//! The first party measures in an orthonormal basis and announces outcome
//! `a`; the second party then measures in an orthonormal basis that depends on
//! `a`, each vector carrying the label it decodes to.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::Serialize;

use crate::bipartite::{decompose, ComponentDecomposition, PureState};
use crate::error::{Error, Result};
use crate::linalg::{self, inner, norm, orthonormal_complete, seeded_rng, C64};

/// Decoded label of a second-party outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Label {
    State(usize),
    Reject,
}

/// Which tensor factor measures first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Party {
    #[default]
    A,
    B,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledVector {
    pub label: Label,
    pub vector: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneWayProtocol {
    /// The tensor factor that measures first. For `Party::B` the states are
    /// decomposed along their second factor.
    pub first_party: Party,
    pub first_basis: Vec<Vec<C64>>,
    /// `second[a]` is the labeled basis used after first-party outcome `a`.
    pub second: Vec<Vec<LabeledVector>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validation {
    pub passed: bool,
    pub worst_residual: f64,
}

impl OneWayProtocol {
    /// Local dimension of the first party.
    pub fn first_dim(&self) -> usize {
        self.first_basis.len()
    }

    /// Local dimension of the second party.
    pub fn second_dim(&self) -> usize {
        self.second
            .first()
            .and_then(|m| m.first())
            .map_or(0, |v| v.vector.len())
    }

    /// The same protocol with the party roles exchanged, for use on states
    /// whose tensor factors have been swapped.
    pub fn with_first_party(mut self, party: Party) -> Self {
        self.first_party = party;
        self
    }

    /// Maps each local measurement through fixed unitaries: first-party
    /// vectors by `first`, second-party vectors by `second`.
    pub fn conjugated(&self, first: &crate::CMatrix, second: &crate::CMatrix) -> Self {
        OneWayProtocol {
            first_party: self.first_party,
            first_basis: self.first_basis.iter().map(|v| first.mul_vec(v)).collect(),
            second: self
                .second
                .iter()
                .map(|m| {
                    m.iter()
                        .map(|lv| LabeledVector {
                            label: lv.label,
                            vector: second.mul_vec(&lv.vector),
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

/// Checks that the first basis is orthonormal and that every second-party
/// measurement is a full orthonormal basis of one common dimension.
pub fn validate(p: &OneWayProtocol) -> Validation {
    let da = p.first_basis.len();
    let db = p.second_dim();
    let mut worst = 0.0f64;
    let mut shape_ok = da > 0 && p.second.len() == da;
    shape_ok &= p.first_basis.iter().all(|v| v.len() == da);
    if shape_ok {
        worst = worst.max(linalg::orthonormality_residual(&p.first_basis).unwrap_or(f64::INFINITY));
    }
    for m in &p.second {
        if m.len() != db || m.iter().any(|lv| lv.vector.len() != db) {
            shape_ok = false;
            continue;
        }
        let vs: Vec<Vec<C64>> = m.iter().map(|lv| lv.vector.clone()).collect();
        worst = worst.max(linalg::orthonormality_residual(&vs).unwrap_or(f64::INFINITY));
    }
    if !shape_ok {
        worst = f64::INFINITY;
    }
    Validation {
        passed: shape_ok && worst <= linalg::DERIVED_TOL,
        worst_residual: worst,
    }
}

/// Exact decode probabilities: row `i`, column `j < d` is the probability
/// that state `i` is decoded as state `j`; column `d` is the reject mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionMatrix {
    pub rows: Vec<Vec<f64>>,
}

impl ConfusionMatrix {
    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.rows.iter().enumerate().map(|(i, r)| r[i]).collect()
    }

    pub fn min_diagonal(&self) -> f64 {
        self.diagonal().into_iter().fold(1.0, f64::min)
    }

    pub fn reject(&self, state: usize) -> f64 {
        *self.rows[state].last().expect("reject column")
    }

    /// Largest deviation of a row sum from one.
    pub fn stochasticity_residual(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise distance from `[I | 0]`.
    pub fn distance_from_identity(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, r) in self.rows.iter().enumerate() {
            for (j, &x) in r.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((x - target).abs());
            }
        }
        worst
    }
}

fn states_for(p: &OneWayProtocol, states: &[PureState]) -> Vec<PureState> {
    match p.first_party {
        Party::A => states.to_vec(),
        Party::B => states.iter().map(PureState::swapped).collect(),
    }
}

fn check_dims(p: &OneWayProtocol, states: &[PureState]) -> Result<()> {
    for s in states {
        if s.dim_a() != p.first_dim() || s.dim_b() != p.second_dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} state for a {}x{} protocol",
                s.dim_a(),
                s.dim_b(),
                p.first_dim(),
                p.second_dim()
            )));
        }
    }
    Ok(())
}

fn label_column(label: Label, d: usize) -> Result<usize> {
    match label {
        Label::State(j) if j < d => Ok(j),
        Label::State(j) => Err(Error::UnknownLabel { label: j }),
        Label::Reject => Ok(d),
    }
}

fn decomposition_for(p: &OneWayProtocol, states: &[PureState]) -> Result<ComponentDecomposition> {
    let local = states_for(p, states);
    check_dims(p, &local)?;
    decompose(&local, &p.first_basis)
}

/// Computes `Σ_a Σ_{k: label=j} |<b_{a,k}|η_a^i>|²` for every state and label.
pub fn confusion_matrix(p: &OneWayProtocol, states: &[PureState]) -> Result<ConfusionMatrix> {
    let d = states.len();
    if states.is_empty() {
        return Ok(ConfusionMatrix { rows: vec![] });
    }
    let decomp = decomposition_for(p, states)?;
    let mut rows = vec![vec![0.0; d + 1]; d];
    for (i, row) in rows.iter_mut().enumerate() {
        for (a, measurement) in p.second.iter().enumerate() {
            let eta = decomp.eta(i, a);
            for lv in measurement {
                row[label_column(lv.label, d)?] += inner(&lv.vector, eta).norm_sqr();
            }
        }
    }
    Ok(ConfusionMatrix { rows })
}

/// True iff every state is decoded correctly with probability at least
/// `1 - tol`. An empty ensemble is trivially distinguished.
pub fn verify_perfect(p: &OneWayProtocol, states: &[PureState], tol: f64) -> Result<bool> {
    let cm = confusion_matrix(p, states)?;
    Ok(cm.diagonal().iter().all(|&x| x >= 1.0 - tol))
}

/// Empirical decode frequencies from `shots` simulated runs per state: the
/// first-party outcome is drawn from `‖η_a^i‖²`, then the second-party outcome
/// from the normalized conditional state.
pub fn monte_carlo_confusion(
    p: &OneWayProtocol,
    states: &[PureState],
    shots: usize,
    seed: u64,
) -> Result<ConfusionMatrix> {
    let d = states.len();
    let decomp = decomposition_for(p, states)?;
    let mut rng = seeded_rng(seed);
    let mut rows = vec![vec![0.0; d + 1]; d];
    for (i, row) in rows.iter_mut().enumerate() {
        let first_weights: Vec<f64> = (0..p.first_dim())
            .map(|a| norm(decomp.eta(i, a)).powi(2))
            .collect();
        let first = WeightedIndex::new(&first_weights)
            .map_err(|e| Error::InvalidState(format!("outcome weights: {e}")))?;
        let mut second = Vec::with_capacity(p.first_dim());
        for (a, measurement) in p.second.iter().enumerate() {
            let w: Vec<f64> = measurement
                .iter()
                .map(|lv| inner(&lv.vector, decomp.eta(i, a)).norm_sqr())
                .collect();
            // Outcomes of zero weight are never sampled.
            second.push(WeightedIndex::new(&w).ok());
        }
        let mut counts = vec![0usize; d + 1];
        for _ in 0..shots {
            let a = first.sample(&mut rng);
            let dist = second[a]
                .as_ref()
                .ok_or_else(|| Error::InvalidState("sampled a zero-weight outcome".into()))?;
            let k = dist.sample(&mut rng);
            counts[label_column(p.second[a][k].label, d)?] += 1;
        }
        for (r, c) in row.iter_mut().zip(counts) {
            *r = c as f64 / shots as f64;
        }
    }
    Ok(ConfusionMatrix { rows })
}

/// Assembles the first-party-first protocol for a decomposition in which the
/// components at every outcome are pairwise orthogonal.
///
/// At outcome `a` the second party measures along the normalized nonzero
/// `η_a^i` (label `i`), completed to a full basis whose extra vectors decode
/// to [`Label::Reject`]. Components are orthonormalized in order of
/// decreasing norm, so a state whose component at `a` is small enough to be
/// swamped by the residual overlap `tol` loses at most about `tol` of its
/// success probability.
pub fn build_one_way_protocol(decomp: &ComponentDecomposition, tol: f64) -> Result<OneWayProtocol> {
    let check = decomp.form_check(tol);
    if !check.passed {
        return Err(Error::FormCheckFailed {
            residual: check.worst_residual,
        });
    }
    let dim_b = decomp
        .components
        .first()
        .and_then(|c| c.first())
        .map_or(0, Vec::len);
    let mut second = Vec::with_capacity(decomp.dim_a());
    for a in 0..decomp.dim_a() {
        let mut order: Vec<(usize, f64)> = (0..decomp.num_states())
            .map(|i| (i, norm(decomp.eta(i, a))))
            .filter(|&(_, n)| n > 0.0)
            .collect();
        order.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));

        let mut kept: Vec<Vec<C64>> = Vec::new();
        let mut labels = Vec::new();
        for (i, n) in order {
            if kept.len() == dim_b {
                break;
            }
            let mut v: Vec<C64> = decomp.eta(i, a).iter().map(|z| z / n).collect();
            linalg::project_out(&mut v, &kept);
            let r = norm(&v);
            // Only happens for components of squared norm O(tol).
            if r < 0.5 {
                continue;
            }
            kept.push(v.into_iter().map(|z| z / r).collect());
            labels.push(Label::State(i));
        }
        let full = orthonormal_complete(&kept, dim_b, linalg::DERIVED_TOL)?;
        let measurement = full
            .into_iter()
            .enumerate()
            .map(|(k, vector)| LabeledVector {
                label: labels.get(k).copied().unwrap_or(Label::Reject),
                vector,
            })
            .collect();
        second.push(measurement);
    }
    Ok(OneWayProtocol {
        first_party: Party::A,
        first_basis: decomp.alice_basis.clone(),
        second,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipartite::bell::*;
    use crate::bipartite::{computational_basis, haar_random_subspace};
    use crate::linalg::{basis_vector, haar_random_unitary};

    fn computational_protocol(labels: [[Label; 2]; 2]) -> OneWayProtocol {
        OneWayProtocol {
            first_party: Party::A,
            first_basis: computational_basis(2),
            second: labels
                .iter()
                .map(|ls| {
                    ls.iter()
                        .enumerate()
                        .map(|(k, &label)| LabeledVector {
                            label,
                            vector: basis_vector(2, k),
                        })
                        .collect()
                })
                .collect(),
        }
    }

    #[test]
    fn validate_cases() {
        let p = computational_protocol([[Label::State(0), Label::Reject]; 2]);
        let v = validate(&p);
        assert!(v.passed);
        assert_eq!(v.worst_residual, 0.0);

        let mut dup = p.clone();
        dup.second[1][1].vector = dup.second[1][0].vector.clone();
        let v = validate(&dup);
        assert!(!v.passed);
        // Gram [[1,1],[1,1]] minus identity has Frobenius norm √2; the
        // offending overlap itself is 1.
        assert!(v.worst_residual >= 1.0);
    }

    #[test]
    fn phi_plus_psi_plus_protocol() {
        let states = [phi_plus(), psi_plus()];
        let decomp = decompose(&states, &computational_basis(2)).unwrap();
        let p = build_one_way_protocol(&decomp, 1e-10).unwrap();
        assert_eq!(p.first_basis, computational_basis(2));
        assert_eq!(p.second[0][0].label, Label::State(0));
        assert_eq!(p.second[0][1].label, Label::State(1));
        assert_eq!(p.second[0][0].vector, basis_vector(2, 0));
        let cm = confusion_matrix(&p, &states).unwrap();
        assert!(cm.distance_from_identity() < 1e-15);
        assert_eq!(cm.reject(0), 0.0);
    }

    #[test]
    fn naive_labels_on_phi_pair() {
        // Bob labels |0> as Φ+ and |1> as Φ- regardless of Alice's outcome.
        let p = computational_protocol([[Label::State(0), Label::State(1)]; 2]);
        let cm = confusion_matrix(&p, &[phi_plus(), phi_minus()]).unwrap();
        for i in 0..2 {
            assert!((cm.rows[i][0] - 0.5).abs() < 1e-15);
            assert!((cm.rows[i][1] - 0.5).abs() < 1e-15);
        }
        assert!(!verify_perfect(&p, &[phi_plus(), phi_minus()], 1e-9).unwrap());
    }

    #[test]
    fn single_state() {
        let s = PureState::product(&basis_vector(2, 0), &basis_vector(2, 0)).unwrap();
        let decomp = decompose(std::slice::from_ref(&s), &computational_basis(2)).unwrap();
        let p = build_one_way_protocol(&decomp, 1e-10).unwrap();
        let cm = confusion_matrix(&p, &[s]).unwrap();
        assert_eq!(cm.rows, vec![vec![1.0, 0.0]]);
    }

    #[test]
    fn empty_ensemble_is_perfect() {
        let p = computational_protocol([[Label::Reject; 2]; 2]);
        assert!(verify_perfect(&p, &[], 1e-9).unwrap());
    }

    #[test]
    fn build_refuses_failed_form() {
        let decomp = decompose(&[phi_plus(), phi_minus()], &computational_basis(2)).unwrap();
        assert!(matches!(
            build_one_way_protocol(&decomp, 1e-10),
            Err(Error::FormCheckFailed { .. })
        ));
    }

    #[test]
    fn unknown_label_is_an_error() {
        let p = computational_protocol([[Label::State(5), Label::Reject]; 2]);
        assert!(matches!(
            confusion_matrix(&p, &[phi_plus()]),
            Err(Error::UnknownLabel { label: 5 })
        ));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = computational_protocol([[Label::State(0), Label::Reject]; 2]);
        let q = haar_random_subspace(2, 3, 1, 0).unwrap();
        assert!(confusion_matrix(&p, q.basis()).is_err());
    }

    #[test]
    fn rows_are_stochastic_for_arbitrary_protocols() {
        let q = haar_random_subspace(3, 4, 5, 21).unwrap();
        let first = haar_random_unitary(3, 22).columns();
        let second = (0..3)
            .map(|a| {
                haar_random_unitary(4, 30 + a)
                    .columns()
                    .into_iter()
                    .enumerate()
                    .map(|(k, vector)| LabeledVector {
                        label: if k < 3 { Label::State(k + a as usize) } else { Label::Reject },
                        vector,
                    })
                    .map(|mut lv| {
                        if let Label::State(j) = lv.label {
                            lv.label = Label::State(j % 5);
                        }
                        lv
                    })
                    .collect()
            })
            .collect();
        let p = OneWayProtocol {
            first_party: Party::A,
            first_basis: first,
            second,
        };
        assert!(validate(&p).passed);
        let cm = confusion_matrix(&p, q.basis()).unwrap();
        assert!(cm.stochasticity_residual() <= 1e-12);
    }

    #[test]
    fn second_party_first_reads_transposed_states() {
        let states = [phi_plus(), psi_plus()];
        let decomp = decompose(&states, &computational_basis(2)).unwrap();
        let p = build_one_way_protocol(&decomp, 1e-10).unwrap().with_first_party(Party::B);
        // Both states are symmetric, so the swapped reading is also perfect.
        assert!(verify_perfect(&p, &states, 1e-12).unwrap());
    }
}
