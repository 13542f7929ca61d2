//! Bipartite pure states, subspaces and their decomposition along a basis of
//! the first party.
//!
//! A state `|ψ> = Σ c[a][b] |a>|b>` is stored as its `dim_a x dim_b`
//! coefficient matrix; the joint index of `|a>|b>` is `a * dim_b + b`, so the
//! row-major storage of the coefficient matrix is the state vector itself.

use crate::error::{Error, Result};
use crate::linalg::{
    self, gram, haar_random_unitary_with, inner, kron_vec, norm, project_out, random_unit_vector,
    seeded_rng, CMatrix, C64, DERIVED_TOL,
};

/// Normalized bipartite pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    coeffs: CMatrix,
}

impl PureState {
    pub fn new(coeffs: CMatrix) -> Result<Self> {
        if !coeffs.is_finite() {
            return Err(Error::NonFinite);
        }
        let n = coeffs.frobenius_norm();
        if (n - 1.0).abs() > DERIVED_TOL {
            return Err(Error::NotNormalized { norm: n });
        }
        Ok(Self { coeffs })
    }

    pub fn from_vector(dim_a: usize, dim_b: usize, v: Vec<C64>) -> Result<Self> {
        Self::new(CMatrix::from_row_major(dim_a, dim_b, v)?)
    }

    /// Rescales to unit norm; for vectors that are normalized up to rounding.
    pub(crate) fn from_vector_renormalized(dim_a: usize, dim_b: usize, v: Vec<C64>) -> Self {
        let n = norm(&v);
        let v = v.into_iter().map(|z| z / n).collect();
        Self {
            coeffs: CMatrix::from_row_major(dim_a, dim_b, v).expect("length checked by caller"),
        }
    }

    /// `|alice> ⊗ |bob>`; both factors must be unit vectors.
    pub fn product(alice: &[C64], bob: &[C64]) -> Result<Self> {
        Self::from_vector(alice.len(), bob.len(), kron_vec(alice, bob))
    }

    pub fn dim_a(&self) -> usize {
        self.coeffs.rows()
    }

    pub fn dim_b(&self) -> usize {
        self.coeffs.cols()
    }

    pub fn coeffs(&self) -> &CMatrix {
        &self.coeffs
    }

    pub fn vector(&self) -> &[C64] {
        self.coeffs.as_slice()
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        inner(self.vector(), other.vector())
    }

    /// Same state with the parties exchanged.
    pub fn swapped(&self) -> PureState {
        PureState {
            coeffs: self.coeffs.transpose(),
        }
    }

    pub fn with_phase(&self, phase: C64) -> PureState {
        PureState {
            coeffs: self.coeffs.scale(phase),
        }
    }

    /// Applies `ua ⊗ ub`.
    pub fn apply_local(&self, ua: &CMatrix, ub: &CMatrix) -> PureState {
        // (ua ⊗ ub)|ψ> has coefficient matrix ua · C · ubᵀ.
        PureState {
            coeffs: &(ua * &self.coeffs) * &ub.transpose(),
        }
    }

    /// Schmidt coefficients, descending.
    pub fn schmidt_coefficients(&self) -> Result<Vec<f64>> {
        Ok(linalg::svd(&self.coeffs)?.singulars)
    }
}

/// Standard two-qubit states used throughout tests and examples.
pub mod bell {
    use super::PureState;
    use crate::linalg::C64;

    fn two_qubit(v: [f64; 4]) -> PureState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        PureState::from_vector(2, 2, v.iter().map(|&x| C64::new(x * h, 0.0)).collect())
            .expect("normalized")
    }

    /// `(|00> + |11>)/√2`
    pub fn phi_plus() -> PureState {
        two_qubit([1.0, 0.0, 0.0, 1.0])
    }

    /// `(|00> - |11>)/√2`
    pub fn phi_minus() -> PureState {
        two_qubit([1.0, 0.0, 0.0, -1.0])
    }

    /// `(|01> + |10>)/√2`
    pub fn psi_plus() -> PureState {
        two_qubit([0.0, 1.0, 1.0, 0.0])
    }

    /// `(|01> - |10>)/√2`
    pub fn psi_minus() -> PureState {
        two_qubit([0.0, 1.0, -1.0, 0.0])
    }
}

/// A product state `|alice> ⊗ |bob>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductWitness {
    pub alice: Vec<C64>,
    pub bob: Vec<C64>,
}

impl ProductWitness {
    pub fn new(alice: Vec<C64>, bob: Vec<C64>) -> Result<Self> {
        for v in [&alice, &bob] {
            let n = norm(v);
            if (n - 1.0).abs() > DERIVED_TOL {
                return Err(Error::NotNormalized { norm: n });
            }
        }
        Ok(Self { alice, bob })
    }

    /// Splits a Schmidt-rank-one state into its factors.
    pub fn from_state(state: &PureState, tol: f64) -> Result<Self> {
        let s = linalg::svd(state.coeffs())?;
        if s.singulars.get(1).copied().unwrap_or(0.0) > tol {
            return Err(Error::InvalidState("witness is not a product state".into()));
        }
        // C = σ u vᵀ with u = left column 0, vᵀ = right row 0.
        let alice = s.left.column(0);
        let scale = C64::new(s.singulars[0], 0.0);
        let bob = s.right.row(0).into_iter().map(|z| z * scale).collect::<Vec<_>>();
        let bob = linalg::normalized(&bob).ok_or(Error::NotNormalized { norm: 0.0 })?;
        Ok(Self { alice, bob })
    }

    pub fn state(&self) -> PureState {
        PureState::from_vector_renormalized(
            self.alice.len(),
            self.bob.len(),
            kron_vec(&self.alice, &self.bob),
        )
    }

    pub fn swapped(&self) -> ProductWitness {
        ProductWitness {
            alice: self.bob.clone(),
            bob: self.alice.clone(),
        }
    }

    /// Fails unless the witness lies in `q` to within `tol`.
    pub fn validate(&self, q: &Subspace, tol: f64) -> Result<()> {
        if self.alice.len() != q.dim_a() || self.bob.len() != q.dim_b() {
            return Err(Error::DimensionMismatch(format!(
                "witness {}x{} for a {}x{} subspace",
                self.alice.len(),
                self.bob.len(),
                q.dim_a(),
                q.dim_b()
            )));
        }
        let residual = q.projection_residual(self.state().vector());
        if residual > tol {
            return Err(Error::NotInSubspace { residual });
        }
        Ok(())
    }
}

/// A subspace given by an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    dim_a: usize,
    dim_b: usize,
    basis: Vec<PureState>,
    reorthonormalized: bool,
}

impl Subspace {
    /// Wraps an orthonormal list of states. Pairwise overlaps must vanish to
    /// within 1e-10.
    pub fn new(basis: Vec<PureState>) -> Result<Self> {
        let first = basis
            .first()
            .ok_or_else(|| Error::OutOfRange("empty subspace basis".into()))?;
        let (dim_a, dim_b) = (first.dim_a(), first.dim_b());
        if basis.iter().any(|s| s.dim_a() != dim_a || s.dim_b() != dim_b) {
            return Err(Error::DimensionMismatch("basis states of different shapes".into()));
        }
        if basis.len() > dim_a * dim_b {
            return Err(Error::OutOfRange(format!(
                "{} basis states in a {}-dimensional space",
                basis.len(),
                dim_a * dim_b
            )));
        }
        let worst = max_pairwise_overlap(&basis);
        if worst > DERIVED_TOL {
            return Err(Error::NotOrthogonal { residual: worst });
        }
        Ok(Self {
            dim_a,
            dim_b,
            basis,
            reorthonormalized: false,
        })
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    /// Dimension of the subspace.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[PureState] {
        &self.basis
    }

    /// True when [`subspace_from_vectors`] had to orthonormalize its input.
    pub fn reorthonormalized(&self) -> bool {
        self.reorthonormalized
    }

    pub fn vectors(&self) -> Vec<Vec<C64>> {
        self.basis.iter().map(|s| s.vector().to_vec()).collect()
    }

    /// Orthogonal projector onto the subspace, on the joint space.
    pub fn projector(&self) -> CMatrix {
        projector_of(&self.vectors(), self.dim_a * self.dim_b)
    }

    pub fn project(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        for s in &self.basis {
            let c = inner(s.vector(), v);
            for (o, x) in out.iter_mut().zip(s.vector()) {
                *o += c * x;
            }
        }
        out
    }

    /// `‖v - P v‖`.
    pub fn projection_residual(&self, v: &[C64]) -> f64 {
        let p = self.project(v);
        norm(&v.iter().zip(&p).map(|(a, b)| a - b).collect::<Vec<_>>())
    }

    /// Frobenius distance between the projectors of two subspaces.
    pub fn projector_distance(&self, other: &Subspace) -> f64 {
        (&self.projector() - &other.projector()).frobenius_norm()
    }
}

pub(crate) fn projector_of(vectors: &[Vec<C64>], dim: usize) -> CMatrix {
    let mut p = CMatrix::zeros(dim, dim);
    for v in vectors {
        for i in 0..dim {
            for j in 0..dim {
                p[(i, j)] += v[i] * v[j].conj();
            }
        }
    }
    p
}

pub(crate) fn max_pairwise_overlap(states: &[PureState]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..states.len() {
        for j in 0..i {
            worst = worst.max(states[i].inner(&states[j]).norm());
        }
    }
    worst
}

pub fn computational_basis(dim: usize) -> Vec<Vec<C64>> {
    (0..dim).map(|k| linalg::basis_vector(dim, k)).collect()
}

/// Components `η_a^i` of each state along an orthonormal basis `{|a'>}` of the
/// first party: `|ψ_i> = Σ_a |a'> ⊗ |η_a^i>`. The `η` are unnormalized and may
/// vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentDecomposition {
    pub alice_basis: Vec<Vec<C64>>,
    /// `components[i][a]` is `η_a^i`.
    pub components: Vec<Vec<Vec<C64>>>,
}

/// Outcome of the component orthogonality test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormCheck {
    pub passed: bool,
    /// `max_{a, i≠j} |<η_a^i|η_a^j>|`, zero when there is at most one state.
    pub worst_residual: f64,
}

impl ComponentDecomposition {
    pub fn num_states(&self) -> usize {
        self.components.len()
    }

    pub fn dim_a(&self) -> usize {
        self.alice_basis.len()
    }

    pub fn eta(&self, state: usize, outcome: usize) -> &[C64] {
        &self.components[state][outcome]
    }

    /// Rebuilds `Σ_a |a'> ⊗ |η_a^i>` as a joint vector.
    pub fn reassemble(&self, state: usize) -> Vec<C64> {
        let dim_a = self.dim_a();
        let dim_b = self.components[state].first().map_or(0, Vec::len);
        let mut v = vec![C64::new(0.0, 0.0); dim_a * dim_b];
        for (a, eta) in self.components[state].iter().enumerate() {
            let ket = &self.alice_basis[a];
            for x in 0..dim_a {
                for b in 0..dim_b {
                    v[x * dim_b + b] += ket[x] * eta[b];
                }
            }
        }
        v
    }

    /// For every outcome `a`, the vectors `{η_a^i}_i` must be pairwise
    /// orthogonal. With a qubit first party this is exactly the condition for
    /// a first-party-first one-way protocol to exist.
    pub fn form_check(&self, tol: f64) -> FormCheck {
        let mut worst = 0.0f64;
        for a in 0..self.dim_a() {
            for i in 0..self.num_states() {
                for j in 0..i {
                    worst = worst.max(inner(self.eta(i, a), self.eta(j, a)).norm());
                }
            }
        }
        FormCheck {
            passed: worst <= tol,
            worst_residual: worst,
        }
    }
}

pub fn check_local_basis(basis: &[Vec<C64>], dim: usize) -> Result<()> {
    if basis.len() != dim || basis.iter().any(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "local basis must have {dim} vectors of length {dim}"
        )));
    }
    let residual = linalg::orthonormality_residual(basis)?;
    if residual > DERIVED_TOL {
        return Err(Error::NotOrthonormal { residual });
    }
    Ok(())
}

/// `η_a^i[b] = Σ_x conj(alice_basis[a][x]) c_i[x][b]`.
pub fn decompose(states: &[PureState], alice_basis: &[Vec<C64>]) -> Result<ComponentDecomposition> {
    let (dim_a, dim_b) = match states.first() {
        Some(s) => (s.dim_a(), s.dim_b()),
        None => (alice_basis.len(), 0),
    };
    if states.iter().any(|s| s.dim_a() != dim_a || s.dim_b() != dim_b) {
        return Err(Error::DimensionMismatch("states of different shapes".into()));
    }
    check_local_basis(alice_basis, dim_a)?;
    let components = states
        .iter()
        .map(|s| {
            alice_basis
                .iter()
                .map(|ket| {
                    (0..dim_b)
                        .map(|b| (0..dim_a).map(|x| ket[x].conj() * s.coeffs()[(x, b)]).sum())
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(ComponentDecomposition {
        alice_basis: alice_basis.to_vec(),
        components,
    })
}

pub fn walgate_form_check(
    states: &[PureState],
    alice_basis: &[Vec<C64>],
    tol: f64,
) -> Result<FormCheck> {
    Ok(decompose(states, alice_basis)?.form_check(tol))
}

/// Orthonormalizes linearly independent joint vectors into a subspace basis.
/// The result is flagged `reorthonormalized` when the input Gram matrix was
/// more than 1e-8 away from the identity.
pub fn subspace_from_vectors(raw: &[Vec<C64>], dim_a: usize, dim_b: usize) -> Result<Subspace> {
    let dim = dim_a * dim_b;
    if raw.is_empty() {
        return Err(Error::OutOfRange("empty vector list".into()));
    }
    if raw.len() > dim {
        return Err(Error::RankDeficient { index: dim });
    }
    if raw.iter().any(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch(format!("vectors must have length {dim}")));
    }
    if raw.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let deviation = (&gram(raw)? - &CMatrix::identity(raw.len())).frobenius_norm();

    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(raw.len());
    for (index, v) in raw.iter().enumerate() {
        let scale = norm(v);
        let mut r = v.clone();
        project_out(&mut r, &basis);
        let n = norm(&r);
        if scale == 0.0 || n <= 1e-10 * scale {
            return Err(Error::RankDeficient { index });
        }
        basis.push(r.into_iter().map(|z| z / n).collect());
    }
    let states = basis
        .into_iter()
        .map(|v| PureState::from_vector_renormalized(dim_a, dim_b, v))
        .collect();
    let mut q = Subspace::new(states)?;
    q.reorthonormalized = deviation > 1e-8;
    Ok(q)
}

/// First `d` columns of a Haar unitary on the joint space.
pub fn haar_random_subspace(dim_a: usize, dim_b: usize, d: usize, seed: u64) -> Result<Subspace> {
    haar_random_subspace_with(&mut seeded_rng(seed), dim_a, dim_b, d)
}

pub fn haar_random_subspace_with<R: rand::Rng + ?Sized>(
    rng: &mut R,
    dim_a: usize,
    dim_b: usize,
    d: usize,
) -> Result<Subspace> {
    let dim = dim_a * dim_b;
    if d == 0 || d > dim {
        return Err(Error::OutOfRange(format!(
            "subspace dimension {d} in a {dim}-dimensional space"
        )));
    }
    let u = haar_random_unitary_with(rng, dim);
    let basis = (0..d)
        .map(|k| PureState::from_vector_renormalized(dim_a, dim_b, u.column(k)))
        .collect();
    Subspace::new(basis)
}

/// A random three-dimensional subspace containing a random product state.
/// The returned basis is mixed by a random unitary so that the product state
/// is not itself a basis member.
pub fn planted_product_subspace(
    dim_a: usize,
    dim_b: usize,
    seed: u64,
) -> Result<(Subspace, ProductWitness)> {
    planted_product_subspace_with(&mut seeded_rng(seed), dim_a, dim_b)
}

pub fn planted_product_subspace_with<R: rand::Rng + ?Sized>(
    rng: &mut R,
    dim_a: usize,
    dim_b: usize,
) -> Result<(Subspace, ProductWitness)> {
    if dim_a < 2 || dim_b < 2 {
        return Err(Error::OutOfRange(format!("local dimensions {dim_a}x{dim_b}")));
    }
    let witness = ProductWitness {
        alice: random_unit_vector(rng, dim_a),
        bob: random_unit_vector(rng, dim_b),
    };
    let dim = dim_a * dim_b;
    let mut vecs = vec![witness.state().vector().to_vec()];
    while vecs.len() < 3 {
        let mut v = linalg::gaussian_vector(rng, dim);
        project_out(&mut v, &vecs);
        if let Some(u) = linalg::normalized(&v) {
            vecs.push(u);
        }
    }
    let mix = haar_random_unitary_with(rng, 3);
    let mixed: Vec<Vec<C64>> = (0..3)
        .map(|i| {
            (0..dim)
                .map(|x| (0..3).map(|j| mix[(j, i)] * vecs[j][x]).sum())
                .collect()
        })
        .collect();
    let basis = mixed
        .into_iter()
        .map(|v| PureState::from_vector_renormalized(dim_a, dim_b, v))
        .collect();
    Ok((Subspace::new(basis)?, witness))
}
