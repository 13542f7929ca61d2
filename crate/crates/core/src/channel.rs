//! Environment-assisted zero-error codes for channels with two Kraus
//! operators.
//!
//! The channel `ρ ↦ K0 ρ K0† + K1 ρ K1†` dilates to the isometry
//! `V|ψ> = K0|ψ>|0>_E + K1|ψ>|1>_E`. Its range is a `d_in`-dimensional
//! subspace of `output ⊗ qubit`, so with the environment measuring first it
//! has a perfectly distinguishable basis `{V|ψ_i>}`. The `|ψ_i>` are the
//! codewords; the receiver decodes with the measurement matching the reported
//! environment outcome, and `log2 d_in` bits go through per use with no error.

use serde::Serialize;

use crate::bipartite::{computational_basis, decompose, PureState, Subspace};
use crate::error::{Error, Result};
use crate::linalg::{
    inner, is_positive_semidefinite, partial_trace_env, CMatrix, C64, DERIVED_TOL,
};
use crate::locc_basis::locc_basis;
use crate::protocol::{build_one_way_protocol, Label, LabeledVector};

#[derive(Debug, Clone, PartialEq)]
pub struct KrausPair {
    k0: CMatrix,
    k1: CMatrix,
}

impl KrausPair {
    /// Checks `K0†K0 + K1†K1 = I` to 1e-10.
    pub fn new(k0: CMatrix, k1: CMatrix) -> Result<Self> {
        if k0.shape() != k1.shape() {
            return Err(Error::DimensionMismatch(format!(
                "Kraus operators {:?} and {:?}",
                k0.shape(),
                k1.shape()
            )));
        }
        if !k0.is_finite() || !k1.is_finite() {
            return Err(Error::NonFinite);
        }
        let residual = completeness_residual(&k0, &k1);
        if residual > DERIVED_TOL {
            return Err(Error::IncompleteKraus { residual });
        }
        Ok(Self { k0, k1 })
    }

    pub fn k0(&self) -> &CMatrix {
        &self.k0
    }

    pub fn k1(&self) -> &CMatrix {
        &self.k1
    }

    pub fn d_in(&self) -> usize {
        self.k0.cols()
    }

    pub fn d_out(&self) -> usize {
        self.k0.rows()
    }

    /// Amplitude damping with decay probability `gamma`.
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        let r = |x: f64| C64::new(x, 0.0);
        let k0 = CMatrix::from_rows(&[vec![r(1.0), r(0.0)], vec![r(0.0), r((1.0 - gamma).sqrt())]])?;
        let k1 = CMatrix::from_rows(&[vec![r(0.0), r(gamma.sqrt())], vec![r(0.0), r(0.0)]])?;
        Self::new(k0, k1)
    }

    /// Phase flip applied with probability `p`.
    pub fn phase_flip(p: f64) -> Result<Self> {
        let k0 = CMatrix::identity(2).scale(C64::new((1.0 - p).sqrt(), 0.0));
        let k1 = CMatrix::diag(&[C64::new(p.sqrt(), 0.0), C64::new(-p.sqrt(), 0.0)]);
        Self::new(k0, k1)
    }

    /// Channel from the first `d_in` columns of an isometry on
    /// `output ⊗ qubit` (index `b * 2 + e`).
    pub fn from_isometry(v: &CMatrix) -> Result<Self> {
        let (rows, d_in) = v.shape();
        if rows % 2 != 0 {
            return Err(Error::DimensionMismatch(format!("{rows} rows for a qubit environment")));
        }
        let d_out = rows / 2;
        let k = |e: usize| CMatrix::from_fn(d_out, d_in, |b, x| v[(b * 2 + e, x)]);
        Self::new(k(0), k(1))
    }
}

fn completeness_residual(k0: &CMatrix, k1: &CMatrix) -> f64 {
    let s = &(&k0.adjoint() * k0) + &(&k1.adjoint() * k1);
    (&s - &CMatrix::identity(k0.cols())).frobenius_norm()
}

/// `V`, of shape `(2 d_out) x d_in`, with joint index `b * 2 + e`.
#[derive(Debug, Clone, PartialEq)]
pub struct StinespringIsometry {
    pub v: CMatrix,
}

impl StinespringIsometry {
    pub const ENV_DIM: usize = 2;

    pub fn d_out(&self) -> usize {
        self.v.rows() / Self::ENV_DIM
    }

    pub fn d_in(&self) -> usize {
        self.v.cols()
    }

    /// `V|ψ>` as an environment-first bipartite state (`2 x d_out`).
    pub fn output_state(&self, psi: &[C64]) -> Result<PureState> {
        let out = self.v.mul_vec(psi);
        let d_out = self.d_out();
        let coeffs = CMatrix::from_fn(Self::ENV_DIM, d_out, |e, b| out[b * Self::ENV_DIM + e]);
        PureState::new(coeffs)
    }
}

pub fn stinespring(k: &KrausPair) -> StinespringIsometry {
    let (d_out, d_in) = (k.d_out(), k.d_in());
    let v = CMatrix::from_fn(2 * d_out, d_in, |row, x| {
        let (b, e) = (row / 2, row % 2);
        if e == 0 {
            k.k0[(b, x)]
        } else {
            k.k1[(b, x)]
        }
    });
    StinespringIsometry { v }
}

fn validate_density(rho: &CMatrix, dim: usize) -> Result<()> {
    if rho.shape() != (dim, dim) {
        return Err(Error::DimensionMismatch(format!(
            "{:?} density operator for input dimension {dim}",
            rho.shape()
        )));
    }
    if rho.hermiticity_residual() > DERIVED_TOL {
        return Err(Error::InvalidState("not Hermitian".into()));
    }
    if (rho.trace() - C64::new(1.0, 0.0)).norm() > DERIVED_TOL {
        return Err(Error::InvalidState("trace is not one".into()));
    }
    if !is_positive_semidefinite(rho, DERIVED_TOL) {
        return Err(Error::InvalidState("not positive semidefinite".into()));
    }
    Ok(())
}

/// Kraus sum `K0 ρ K0† + K1 ρ K1†`.
pub fn apply_channel(k: &KrausPair, rho: &CMatrix) -> Result<CMatrix> {
    validate_density(rho, k.d_in())?;
    let term = |m: &CMatrix| &(m * rho) * &m.adjoint();
    Ok(&term(&k.k0) + &term(&k.k1))
}

/// `tr_env(V ρ V†)`, the dilation route to the same output.
pub fn apply_channel_via_dilation(k: &KrausPair, rho: &CMatrix) -> Result<CMatrix> {
    validate_density(rho, k.d_in())?;
    let v = stinespring(k).v;
    partial_trace_env(&(&(&v * rho) * &v.adjoint()), StinespringIsometry::ENV_DIM)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvAssistedCode {
    /// Orthonormal input states; codeword `i` carries message `i`.
    pub codewords: Vec<Vec<C64>>,
    /// Basis in which the environment is measured.
    pub env_basis: Vec<Vec<C64>>,
    /// `receiver_measurements[e]` is the receiver's labeled basis after
    /// environment outcome `e`.
    pub receiver_measurements: Vec<Vec<LabeledVector>>,
}

/// Builds the code for an environment measured in `env_basis`
/// (computational when `None`).
pub fn env_assisted_code(k: &KrausPair, env_basis: Option<&[Vec<C64>]>) -> Result<EnvAssistedCode> {
    let iso = stinespring(k);
    let d_in = k.d_in();
    let columns = (0..d_in)
        .map(|x| iso.output_state(&crate::linalg::basis_vector(d_in, x)))
        .collect::<Result<Vec<_>>>()?;
    let range = Subspace::new(columns)?;
    let env_basis = env_basis.map_or_else(|| computational_basis(2), <[_]>::to_vec);
    let rotation = locc_basis(&range, Some(&env_basis))?;

    let decomp = decompose(&rotation.rotated_basis, &env_basis)?;
    let protocol = build_one_way_protocol(&decomp, DERIVED_TOL)?;
    Ok(EnvAssistedCode {
        codewords: rotation.rotation.columns(),
        env_basis,
        receiver_measurements: protocol.second,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityReport {
    /// Probability that codeword `i` is decoded as `i`.
    pub successes: Vec<f64>,
    pub min_success: f64,
    /// `log2 d_in` when every codeword decodes with probability at least
    /// `1 - tol`; `None` when the code is not verified at that tolerance.
    pub bits: Option<f64>,
}

/// Computes, for each codeword `|ψ_i>`,
/// `Σ_e Σ_{k: label i} |(<r_{e,k}| ⊗ <env_e|) V|ψ_i>|²` directly from the
/// dilation.
pub fn verify_capacity(k: &KrausPair, code: &EnvAssistedCode, tol: f64) -> Result<CapacityReport> {
    let iso = stinespring(k);
    let d_out = k.d_out();
    if code.env_basis.len() != 2 || code.receiver_measurements.len() != 2 {
        return Err(Error::DimensionMismatch("environment must be a qubit".into()));
    }
    let mut successes = Vec::with_capacity(code.codewords.len());
    for (i, psi) in code.codewords.iter().enumerate() {
        if psi.len() != k.d_in() {
            return Err(Error::DimensionMismatch(format!("codeword {i} length {}", psi.len())));
        }
        let out = iso.v.mul_vec(psi);
        let mut p = 0.0;
        for (env, measurement) in code.env_basis.iter().zip(&code.receiver_measurements) {
            // (<r| ⊗ <env|) applied to Σ_{b,e} out[b*2+e] |b>|e>
            let conditional: Vec<C64> = (0..d_out)
                .map(|b| (0..2).map(|e| env[e].conj() * out[b * 2 + e]).sum())
                .collect();
            for lv in measurement.iter().filter(|lv| lv.label == Label::State(i)) {
                p += inner(&lv.vector, &conditional).norm_sqr();
            }
        }
        successes.push(p);
    }
    let min_success = successes.iter().copied().fold(1.0, f64::min);
    let bits = (min_success >= 1.0 - tol).then(|| (code.codewords.len() as f64).log2());
    Ok(CapacityReport {
        successes,
        min_success,
        bits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_random_unitary, seeded_rng};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn density(v: &[C64]) -> CMatrix {
        CMatrix::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
    }

    #[test]
    fn identity_channel_dilation() {
        let k = KrausPair::new(CMatrix::identity(2), CMatrix::zeros(2, 2)).unwrap();
        let v = stinespring(&k).v;
        let mut expected = CMatrix::zeros(4, 2);
        expected[(0, 0)] = c(1.0);
        expected[(2, 1)] = c(1.0);
        assert_eq!(v, expected);
    }

    #[test]
    fn phase_flip_dilation_columns() {
        let k = KrausPair::phase_flip(0.5).unwrap();
        let iso = stinespring(&k);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // V|0> = |0>(|0>+|1>)/√2, V|1> = |1>(|0>-|1>)/√2, index b*2+e
        let col0 = iso.v.column(0);
        let col1 = iso.v.column(1);
        for (got, want) in col0.iter().zip([h, h, 0.0, 0.0]) {
            assert!((got - c(want)).norm() < 1e-15);
        }
        for (got, want) in col1.iter().zip([0.0, 0.0, h, -h]) {
            assert!((got - c(want)).norm() < 1e-15);
        }
    }

    #[test]
    fn random_dilation_is_isometric() {
        let u = haar_random_unitary(8, 3);
        let v = u.block(0, 0, 8, 3);
        let k = KrausPair::from_isometry(&v).unwrap();
        assert!(stinespring(&k).v.unitarity_residual() <= 1e-12);
    }

    #[test]
    fn rejects_incomplete_pair() {
        let half = CMatrix::identity(2).scale(c(0.5));
        assert!(matches!(
            KrausPair::new(half.clone(), half),
            Err(Error::IncompleteKraus { .. })
        ));
    }

    #[test]
    fn unitary_channel_code() {
        let u = haar_random_unitary(3, 9);
        let k = KrausPair::new(u, CMatrix::zeros(3, 3)).unwrap();
        let code = env_assisted_code(&k, None).unwrap();
        let report = verify_capacity(&k, &code, 1e-9).unwrap();
        assert!(report.min_success >= 1.0 - 1e-12);
        assert!((report.bits.unwrap() - 3f64.log2()).abs() < 1e-15);
        // Any orthonormal codewords work when K1 = 0.
        let alt = EnvAssistedCode {
            codewords: haar_random_unitary(3, 10).columns(),
            ..code.clone()
        };
        let rotated = env_assisted_code(&k, None).unwrap();
        assert_eq!(rotated.codewords.len(), alt.codewords.len());
    }

    #[test]
    fn amplitude_damping_half() {
        let k = KrausPair::amplitude_damping(0.5).unwrap();
        let code = env_assisted_code(&k, None).unwrap();
        let report = verify_capacity(&k, &code, 1e-9).unwrap();
        assert!(report.min_success >= 1.0 - 1e-9);
        assert_eq!(report.bits, Some(1.0));
    }

    #[test]
    fn phase_flip_code() {
        let k = KrausPair::phase_flip(0.5).unwrap();
        let code = env_assisted_code(&k, None).unwrap();
        let report = verify_capacity(&k, &code, 1e-9).unwrap();
        assert!(report.successes.iter().all(|&s| (s - 1.0).abs() < 1e-12));
        assert_eq!(report.bits, Some(1.0));

        // {|0>, |1>} with receiver measuring in the computational basis
        // also decodes perfectly, whatever the environment says.
        let hand = EnvAssistedCode {
            codewords: computational_basis(2),
            env_basis: computational_basis(2),
            receiver_measurements: (0..2)
                .map(|_| {
                    computational_basis(2)
                        .into_iter()
                        .enumerate()
                        .map(|(k, vector)| LabeledVector {
                            label: Label::State(k),
                            vector,
                        })
                        .collect()
                })
                .collect(),
        };
        let report = verify_capacity(&k, &hand, 1e-9).unwrap();
        assert!(report.successes.iter().all(|&s| (s - 1.0).abs() < 1e-15));
        assert_eq!(report.bits, Some(1.0));
    }

    #[test]
    fn swapped_labels_are_flagged() {
        let k = KrausPair::amplitude_damping(0.3).unwrap();
        let mut code = env_assisted_code(&k, None).unwrap();
        for m in &mut code.receiver_measurements {
            for lv in m.iter_mut() {
                lv.label = match lv.label {
                    Label::State(0) => Label::State(1),
                    Label::State(1) => Label::State(0),
                    other => other,
                };
            }
        }
        let report = verify_capacity(&k, &code, 1e-9).unwrap();
        assert!(report.successes.iter().all(|&s| s < 1e-9));
        assert_eq!(report.bits, None);
    }

    #[test]
    fn apply_channel_examples() {
        let id = KrausPair::new(CMatrix::identity(2), CMatrix::zeros(2, 2)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = density(&[c(h), c(h)]);
        assert!((&apply_channel(&id, &plus).unwrap() - &plus).frobenius_norm() < 1e-15);

        let dephase = KrausPair::phase_flip(0.5).unwrap();
        let out = apply_channel(&dephase, &plus).unwrap();
        let expected = CMatrix::diag(&[c(0.5), c(0.5)]);
        assert!((&out - &expected).frobenius_norm() < 1e-15);

        assert!(apply_channel(&id, &CMatrix::diag(&[c(1.0), c(1.0)])).is_err());
        assert!(apply_channel(&id, &CMatrix::diag(&[c(1.5), c(-0.5)])).is_err());
    }

    #[test]
    fn dual_route_agreement() {
        let mut rng = seeded_rng(4);
        let u = haar_random_unitary(10, 5);
        let k = KrausPair::from_isometry(&u.block(0, 0, 10, 4)).unwrap();
        for _ in 0..20 {
            let g = CMatrix::from_row_major(4, 4, crate::linalg::gaussian_vector(&mut rng, 16)).unwrap();
            let p = &g * &g.adjoint();
            let rho = p.scale(c(1.0) / p.trace());
            let a = apply_channel(&k, &rho).unwrap();
            let b = apply_channel_via_dilation(&k, &rho).unwrap();
            assert!((&a - &b).frobenius_norm() <= 1e-12);
        }
    }

    #[test]
    fn rectangular_channel() {
        // d_in = 3 into d_out = 2 with a qubit environment.
        let u = haar_random_unitary(4, 12);
        let k = KrausPair::from_isometry(&u.block(0, 0, 4, 3)).unwrap();
        assert_eq!((k.d_in(), k.d_out()), (3, 2));
        let code = env_assisted_code(&k, None).unwrap();
        let report = verify_capacity(&k, &code, 1e-9).unwrap();
        assert!(report.min_success >= 1.0 - 1e-9);
        assert!((report.bits.unwrap() - 3f64.log2()).abs() < 1e-15);
    }
}
