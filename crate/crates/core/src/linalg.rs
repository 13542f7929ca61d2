//! Dense complex linear algebra used by every construction in the crate.
//!
//! Matrices are small (dimensions up to a few dozen), row-major and owned.
//! Vectors are plain `Vec<C64>`; the inner product is conjugate-linear in its
//! first argument.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance for algebraic identities (unitarity, reconstruction).
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Tolerance for derived orthogonality checks.
pub const DERIVED_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major storage.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    /// Builds a `len x columns.len()` matrix whose columns are the given vectors.
    pub fn from_columns(len: usize, columns: &[Vec<C64>]) -> Result<Self> {
        if columns.iter().any(|c| c.len() != len) {
            return Err(Error::DimensionMismatch("column length".into()));
        }
        Ok(Self::from_fn(len, columns.len(), |i, j| columns[j][i]))
    }

    /// Square diagonal matrix.
    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| if i == j { entries[i] } else { ZERO })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, i: usize) -> Vec<C64> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<C64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols, "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn kron(&self, other: &CMatrix) -> Self {
        let (r2, c2) = other.shape();
        Self::from_fn(self.rows * r2, self.cols * c2, |i, j| {
            self[(i / r2, j / c2)] * other[(i % r2, j % c2)]
        })
    }

    /// Frobenius norm of `M†M - I`, an upper bound on the operator-norm
    /// deviation from being an isometry.
    pub fn unitarity_residual(&self) -> f64 {
        let g = &self.adjoint() * self;
        (&g - &CMatrix::identity(self.cols)).frobenius_norm()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        (self - &self.adjoint()).frobenius_norm()
    }

    /// Copy of the block `rows x cols` starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "matrix sum dimension mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "matrix difference dimension mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

// ---------------------------------------------------------------------------
// vectors

/// `<a|b>`, conjugate-linear in `a`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Unit vector along `v`, or `None` for the zero vector.
pub fn normalized(v: &[C64]) -> Option<Vec<C64>> {
    let n = norm(v);
    (n > 0.0).then(|| v.iter().map(|z| z / n).collect())
}

pub fn basis_vector(dim: usize, k: usize) -> Vec<C64> {
    let mut v = vec![ZERO; dim];
    v[k] = ONE;
    v
}

/// Kronecker product of two vectors, first factor major.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// Removes from `v` its components along the orthonormal set `basis`, twice
/// over to suppress cancellation error.
pub(crate) fn project_out(v: &mut [C64], basis: &[Vec<C64>]) {
    for _ in 0..2 {
        for u in basis {
            let c = inner(u, v);
            for (x, y) in v.iter_mut().zip(u) {
                *x -= c * y;
            }
        }
    }
}

/// Gram matrix `G[i][j] = <v_i|v_j>`.
pub fn gram(vectors: &[Vec<C64>]) -> Result<CMatrix> {
    let len = vectors.first().map_or(0, Vec::len);
    if vectors.iter().any(|v| v.len() != len) {
        return Err(Error::DimensionMismatch("vectors of unequal length".into()));
    }
    let k = vectors.len();
    let mut g = CMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let z = inner(&vectors[i], &vectors[j]);
            g[(i, j)] = z;
            g[(j, i)] = z.conj();
        }
    }
    Ok(g)
}

/// Frobenius distance of the Gram matrix of `vectors` from the identity.
pub fn orthonormality_residual(vectors: &[Vec<C64>]) -> Result<f64> {
    let g = gram(vectors)?;
    Ok((&g - &CMatrix::identity(vectors.len())).frobenius_norm())
}

/// Extends pairwise-orthogonal nonzero `vectors` (normalized on the way) to an
/// orthonormal basis of `C^dim`. The first `vectors.len()` outputs are the
/// normalized inputs in their original order.
pub fn orthonormal_complete(vectors: &[Vec<C64>], dim: usize, tol: f64) -> Result<Vec<Vec<C64>>> {
    if vectors.len() > dim {
        return Err(Error::DimensionMismatch(format!(
            "{} vectors cannot be orthogonal in dimension {dim}",
            vectors.len()
        )));
    }
    let mut basis = Vec::with_capacity(dim);
    for (index, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} in dimension {dim}",
                v.len()
            )));
        }
        let u = normalized(v).ok_or(Error::RankDeficient { index })?;
        basis.push(u);
    }
    let mut worst = 0.0f64;
    for i in 0..basis.len() {
        for j in 0..i {
            worst = worst.max(inner(&basis[i], &basis[j]).norm());
        }
    }
    if worst > tol {
        return Err(Error::NotOrthogonal { residual: worst });
    }

    // Greedily add the standard basis vector with the largest component
    // outside the current span. Its squared residual is at least 1/dim.
    while basis.len() < dim {
        let mut best: Option<(f64, Vec<C64>)> = None;
        for k in 0..dim {
            let mut r = basis_vector(dim, k);
            project_out(&mut r, &basis);
            let n = norm(&r);
            if best.as_ref().is_none_or(|(bn, _)| n > *bn) {
                best = Some((n, r));
            }
        }
        let (n, r) = best.expect("dim > 0 here");
        basis.push(r.iter().map(|z| z / n).collect());
    }
    Ok(basis)
}

// ---------------------------------------------------------------------------
// singular value decomposition

/// `A = left * diag(singulars) * right` with `left` (n x n) and `right`
/// (d x d) unitary. `right` is the factor itself, not its adjoint.
#[derive(Debug, Clone)]
pub struct Svd {
    pub left: CMatrix,
    pub singulars: Vec<f64>,
    pub right: CMatrix,
}

impl Svd {
    /// The rectangular `n x d` matrix carrying the singular values.
    pub fn sigma(&self) -> CMatrix {
        let (n, d) = (self.left.rows(), self.right.rows());
        let mut s = CMatrix::zeros(n, d);
        for (k, &v) in self.singulars.iter().enumerate() {
            s[(k, k)] = C64::new(v, 0.0);
        }
        s
    }

    pub fn reconstruct(&self) -> CMatrix {
        &(&self.left * &self.sigma()) * &self.right
    }
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
pub fn svd(a: &CMatrix) -> Result<Svd> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let (n, d) = a.shape();
    if n >= d {
        svd_tall(a)
    } else {
        // A† = W' Λ' R'  =>  A = R'† Λ'ᵀ W'†
        let t = svd_tall(&a.adjoint())?;
        Ok(Svd {
            left: t.right.adjoint(),
            singulars: t.singulars,
            right: t.left.adjoint(),
        })
    }
}

fn svd_tall(a: &CMatrix) -> Result<Svd> {
    let (n, d) = a.shape();
    let mut cols = a.columns();
    let mut v: Vec<Vec<C64>> = (0..d).map(|k| basis_vector(d, k)).collect();

    let scale = a.frobenius_norm();
    // Columns this small carry no information at double precision.
    let negligible = (f64::EPSILON * scale).powi(2);
    let orth_tol = f64::EPSILON * (n.max(1) as f64);

    let mut converged = d < 2 || scale == 0.0;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            let residual = worst_column_overlap(&cols, negligible);
            return Err(Error::NoConvergence {
                what: "Jacobi SVD",
                iterations: sweeps,
                residual,
            });
        }
        sweeps += 1;
        converged = true;
        for p in 0..d - 1 {
            for q in p + 1..d {
                let alpha = norm(&cols[p]).powi(2);
                let beta = norm(&cols[q]).powi(2);
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let gamma = inner(&cols[p], &cols[q]);
                let g = gamma.norm();
                if g <= orth_tol * (alpha * beta).sqrt() {
                    continue;
                }
                converged = false;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut cols, p, q, c, s, phase);
                rotate_pair(&mut v, p, q, c, s, phase);
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    let norms: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let singulars: Vec<f64> = order.iter().map(|&k| norms[k]).collect();
    let rank_floor = f64::EPSILON * scale * (d as f64);
    let left_seed: Vec<Vec<C64>> = order
        .iter()
        .filter(|&&k| norms[k] > rank_floor)
        .map(|&k| cols[k].iter().map(|z| z / norms[k]).collect())
        .collect();
    let left_cols = orthonormal_complete(&left_seed, n, 1e-8)?;
    let left = CMatrix::from_columns(n, &left_cols)?;
    let v_sorted: Vec<Vec<C64>> = order.iter().map(|&k| v[k].clone()).collect();
    // A V = C  =>  A = W Λ V†, so the right factor is V†.
    let right = CMatrix::from_columns(d, &v_sorted)?.adjoint();

    Ok(Svd {
        left,
        singulars: singulars.into_iter().take(n.min(d)).collect(),
        right,
    })
}

/// Applies `[x_p, x_q] <- [c x_p - s e^{-iφ} x_q, s x_p + c e^{-iφ} x_q]`.
fn rotate_pair(cols: &mut [Vec<C64>], p: usize, q: usize, c: f64, s: f64, phase: C64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (xp, xq) = (&mut lo[p], &mut hi[0]);
    let ph = phase.conj();
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let bq = ph * *b;
        let new_a = *a * c - bq * s;
        let new_b = *a * s + bq * c;
        *a = new_a;
        *b = new_b;
    }
}

fn worst_column_overlap(cols: &[Vec<C64>], negligible: f64) -> f64 {
    let mut worst = 0.0f64;
    for p in 0..cols.len() {
        for q in p + 1..cols.len() {
            let (a, b) = (norm(&cols[p]).powi(2), norm(&cols[q]).powi(2));
            if a > negligible && b > negligible {
                worst = worst.max(inner(&cols[p], &cols[q]).norm() / (a * b).sqrt());
            }
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// states and channels

/// Traces out the environment factor of a joint operator indexed
/// `out * env_dim + env`.
pub fn partial_trace_env(rho_joint: &CMatrix, env_dim: usize) -> Result<CMatrix> {
    let (r, c) = rho_joint.shape();
    if r != c || env_dim == 0 || r % env_dim != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{r}x{c} operator with environment dimension {env_dim}"
        )));
    }
    let d = r / env_dim;
    Ok(CMatrix::from_fn(d, d, |b, bp| {
        (0..env_dim)
            .map(|e| rho_joint[(b * env_dim + e, bp * env_dim + e)])
            .sum()
    }))
}

/// Positive semidefinite to within `tol`: Cholesky of `H + tol·I` succeeds.
pub fn is_positive_semidefinite(h: &CMatrix, tol: f64) -> bool {
    if !h.is_square() {
        return false;
    }
    let n = h.rows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = h[(j, j)].re + tol;
        for k in 0..j {
            diag -= l[(j, k)].norm_sqr();
        }
        if diag <= 0.0 {
            return false;
        }
        let ljj = diag.sqrt();
        l[(j, j)] = C64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = h[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// random sampling

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<C64> {
    (0..dim)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
        .collect()
}

pub(crate) fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<C64> {
    loop {
        if let Some(v) = normalized(&gaussian_vector(rng, dim)) {
            return v;
        }
    }
}

/// Haar-distributed unitary from a Ginibre matrix orthonormalized column by
/// column. Gram-Schmidt yields the QR factor whose triangular part has a real
/// positive diagonal, which is the phase convention that makes the result
/// Haar distributed.
pub fn haar_random_unitary_with<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let mut q: Vec<Vec<C64>> = Vec::with_capacity(dim);
    while q.len() < dim {
        let mut v = gaussian_vector(rng, dim);
        project_out(&mut v, &q);
        if let Some(u) = normalized(&v) {
            q.push(u);
        }
    }
    CMatrix::from_columns(dim, &q).expect("square by construction")
}

pub fn haar_random_unitary(dim: usize, seed: u64) -> CMatrix {
    haar_random_unitary_with(&mut seeded_rng(seed), dim)
}
