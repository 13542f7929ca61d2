//! Unitary similarity to a zero-diagonal matrix, and the two-state protocol
//! built on it.
//!
//! Two orthogonal states `|ψ> = Σ_j |j>|η_j>` and `|φ> = Σ_k |k>|ν_k>` have a
//! traceless overlap matrix `M[j][k] = <η_j|ν_k>`. Changing the first party's
//! basis by a unitary `X` (new components `η'_i = Σ_j X[j][i] η_j`) sends `M`
//! to `X† M X`. If that has zero diagonal, then after every first-party
//! outcome the two conditional states of the second party are orthogonal.
//!
//! The reduction repeatedly takes the diagonal entry of largest modulus,
//! pairs it with the entry whose real projection onto it is most negative
//! (one exists with a strictly negative projection because the trace is
//! zero), and replaces both by their mean with a closed-form 2 x 2 rotation.
//! Each step removes `|d_i - d_j|²/2 >= |d_i|²/2` from `Σ |d|²`, so the
//! deviation shrinks geometrically.

use crate::bipartite::{decompose, PureState};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, DERIVED_TOL};
use crate::protocol::{build_one_way_protocol, OneWayProtocol};

/// Default iteration cap for [`zero_diagonal_unitary`].
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Unitary `G` such that both diagonal entries of `G† B G` equal `tr(B)/2`.
///
/// Writing the traceless part of `B` as `(h + i k)·σ` with real 3-vectors
/// `h`, `k`, the first column of `G` is the spinor of a unit Bloch vector
/// orthogonal to both `h` and `k`; the second column is its orthogonal
/// complement.
pub fn equalize_pair(b: &CMatrix) -> CMatrix {
    assert_eq!(b.shape(), (2, 2), "equalize_pair takes a 2x2 matrix");
    let i = C64::new(0.0, 1.0);
    let cx = (b[(0, 1)] + b[(1, 0)]) * 0.5;
    let cy = i * (b[(0, 1)] - b[(1, 0)]) * 0.5;
    let cz = (b[(0, 0)] - b[(1, 1)]) * 0.5;
    let h = [cx.re, cy.re, cz.re];
    let k = [cx.im, cy.im, cz.im];
    bloch_spinor_pair(normal_to(h, k))
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn len(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn scaled(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// A unit vector orthogonal to `span{h, k}`.
fn normal_to(h: [f64; 3], k: [f64; 3]) -> [f64; 3] {
    let (big, small) = if len(h) >= len(k) { (h, k) } else { (k, h) };
    let lb = len(big);
    if lb == 0.0 {
        return [0.0, 0.0, 1.0];
    }
    let e1 = scaled(big, 1.0 / lb);
    let proj = dot(small, e1);
    let rest = [small[0] - proj * e1[0], small[1] - proj * e1[1], small[2] - proj * e1[2]];
    let lr = len(rest);
    if lr > f64::EPSILON * lb {
        let n = cross(e1, scaled(rest, 1.0 / lr));
        return scaled(n, 1.0 / len(n));
    }
    // One-dimensional span: project out e1 from the axis it has least weight on.
    let axis = (0..3)
        .min_by(|&a, &b| e1[a].abs().total_cmp(&e1[b].abs()))
        .expect("three axes");
    let mut n = [0.0; 3];
    n[axis] = 1.0;
    let p = dot(n, e1);
    let n = [n[0] - p * e1[0], n[1] - p * e1[1], n[2] - p * e1[2]];
    scaled(n, 1.0 / len(n))
}

/// Columns: the spinor with Bloch vector `n`, then the one with `-n`.
fn bloch_spinor_pair(n: [f64; 3]) -> CMatrix {
    let rho = (n[0] * n[0] + n[1] * n[1]).sqrt();
    // sin θ = 2 sin(θ/2) cos(θ/2); take the larger half-angle factor from n_z
    // and the smaller from ρ, which keeps full precision near the poles.
    let (cos_half, sin_half) = if n[2] >= 0.0 {
        let c = ((1.0 + n[2]) * 0.5).sqrt();
        (c, rho / (2.0 * c))
    } else {
        let s = ((1.0 - n[2]) * 0.5).sqrt();
        (rho / (2.0 * s), s)
    };
    let phase = if rho > 0.0 {
        C64::new(n[0] / rho, n[1] / rho)
    } else {
        C64::new(1.0, 0.0)
    };
    let mut g = CMatrix::zeros(2, 2);
    g[(0, 0)] = C64::new(cos_half, 0.0);
    g[(1, 0)] = phase * sin_half;
    g[(0, 1)] = phase.conj() * sin_half;
    g[(1, 1)] = C64::new(-cos_half, 0.0);
    g
}

#[derive(Debug, Clone)]
pub struct ZeroDiagResult {
    /// `W`, with `W† M W` having (numerically) zero diagonal.
    pub unitary: CMatrix,
    /// `W† M W`, recomputed from scratch.
    pub transformed: CMatrix,
    pub iterations: usize,
    /// `max_i |(W† M W)[i][i]|`.
    pub residual: f64,
    /// `Σ_i |diag|²` before the first step and after each step.
    pub deviation_history: Vec<f64>,
}

fn diag_deviation(m: &CMatrix) -> f64 {
    (0..m.rows()).map(|i| m[(i, i)].norm_sqr()).sum()
}

fn max_diag(m: &CMatrix) -> f64 {
    (0..m.rows()).map(|i| m[(i, i)].norm()).fold(0.0, f64::max)
}

/// `M <- G† M G` with `G` acting on coordinates `(i, j)`.
fn rotate_similarity(m: &mut CMatrix, g: &CMatrix, i: usize, j: usize) {
    rotate_columns(m, g, i, j);
    let n = m.cols();
    for c in 0..n {
        let (x, y) = (m[(i, c)], m[(j, c)]);
        m[(i, c)] = g[(0, 0)].conj() * x + g[(1, 0)].conj() * y;
        m[(j, c)] = g[(0, 1)].conj() * x + g[(1, 1)].conj() * y;
    }
}

/// `M <- M G` with `G` acting on coordinates `(i, j)`.
fn rotate_columns(m: &mut CMatrix, g: &CMatrix, i: usize, j: usize) {
    for r in 0..m.rows() {
        let (x, y) = (m[(r, i)], m[(r, j)]);
        m[(r, i)] = x * g[(0, 0)] + y * g[(1, 0)];
        m[(r, j)] = x * g[(0, 1)] + y * g[(1, 1)];
    }
}

/// Finds a unitary `W` with `max_i |(W† M W)[i][i]| <= tol` for a traceless
/// square `M`. The first `fixed_prefix` coordinates are left untouched; their
/// diagonal entries must already vanish.
pub fn zero_diagonal_unitary(
    m: &CMatrix,
    fixed_prefix: usize,
    tol: f64,
    max_iter: usize,
) -> Result<ZeroDiagResult> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} overlap matrix", m.rows(), m.cols())));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = m.rows();
    if fixed_prefix > n {
        return Err(Error::OutOfRange(format!("fixed prefix {fixed_prefix} of {n}")));
    }
    let input_tol = DERIVED_TOL * m.frobenius_norm().max(1.0);
    let trace = m.trace().norm();
    if trace > input_tol {
        return Err(Error::NonzeroTrace { trace });
    }
    for index in 0..fixed_prefix {
        let value = m[(index, index)].norm();
        if value > input_tol {
            return Err(Error::NonzeroFixedEntry { index, value });
        }
    }

    let mut work = m.clone();
    let mut w = CMatrix::identity(n);
    let mut history = vec![diag_deviation(&work)];
    // Stop a little inside the requested tolerance so the freshly recomputed
    // W† M W still meets it.
    let target = 0.5 * tol;
    let mut iterations = 0;
    loop {
        let active = fixed_prefix..n;
        let Some(i) = active
            .clone()
            .max_by(|&a, &b| work[(a, a)].norm().total_cmp(&work[(b, b)].norm()).then(b.cmp(&a)))
        else {
            break;
        };
        let di = work[(i, i)];
        if di.norm() <= target {
            break;
        }
        if iterations == max_iter {
            return Err(Error::NoConvergence {
                what: "zero-diagonal reduction",
                iterations,
                residual: di.norm(),
            });
        }
        let Some(j) = active
            .filter(|&j| j != i)
            .min_by(|&a, &b| {
                let pa = (work[(a, a)] * di.conj()).re;
                let pb = (work[(b, b)] * di.conj()).re;
                pa.total_cmp(&pb).then(a.cmp(&b))
            })
        else {
            // A single active coordinate cannot be averaged with anything.
            return Err(Error::NoConvergence {
                what: "zero-diagonal reduction",
                iterations,
                residual: di.norm(),
            });
        };
        let (lo, hi) = (i.min(j), i.max(j));
        let block = CMatrix::from_fn(2, 2, |r, c| {
            let idx = [lo, hi];
            work[(idx[r], idx[c])]
        });
        let g = equalize_pair(&block);
        rotate_similarity(&mut work, &g, lo, hi);
        rotate_columns(&mut w, &g, lo, hi);
        iterations += 1;

        let dev = diag_deviation(&work);
        let prev = *history.last().expect("seeded");
        if dev > prev {
            return Err(Error::NoConvergence {
                what: "zero-diagonal descent",
                iterations,
                residual: dev,
            });
        }
        history.push(dev);
    }

    let transformed = &(&w.adjoint() * m) * &w;
    let residual = max_diag(&transformed);
    if residual > tol {
        return Err(Error::NoConvergence {
            what: "zero-diagonal reduction",
            iterations,
            residual,
        });
    }
    Ok(ZeroDiagResult {
        unitary: w,
        transformed,
        iterations,
        residual,
        deviation_history: history,
    })
}

/// `M[j][k] = <η_j|ν_k>` for the first-party computational components.
pub fn overlap_matrix(psi: &PureState, phi: &PureState) -> CMatrix {
    let (ca, cb) = (psi.coeffs(), phi.coeffs());
    let (dim_a, dim_b) = ca.shape();
    CMatrix::from_fn(dim_a, dim_a, |j, k| {
        (0..dim_b).map(|b| ca[(j, b)].conj() * cb[(k, b)]).sum()
    })
}

#[derive(Debug, Clone)]
pub struct TwoStateResult {
    pub protocol: OneWayProtocol,
    pub alice_basis: Vec<Vec<C64>>,
    pub zero_diag: ZeroDiagResult,
}

/// One-way protocol perfectly distinguishing two orthogonal bipartite states.
///
/// With `fixed_first_axis` the first-party basis keeps `|0>` as its first
/// vector; this needs `<η_0|ν_0> = 0` on input.
pub fn two_state_protocol(
    psi: &PureState,
    phi: &PureState,
    fixed_first_axis: bool,
    tol: f64,
) -> Result<TwoStateResult> {
    if psi.dim_a() != phi.dim_a() || psi.dim_b() != phi.dim_b() {
        return Err(Error::DimensionMismatch("states of different shapes".into()));
    }
    let overlap = psi.inner(phi).norm();
    if overlap > DERIVED_TOL {
        return Err(Error::NotOrthogonal { residual: overlap });
    }
    let m = overlap_matrix(psi, phi);
    let zd = zero_diagonal_unitary(&m, usize::from(fixed_first_axis), tol, DEFAULT_MAX_ITER)?;
    // η'_i = Σ_j X[j][i] η_j corresponds to the basis vector conj(X[:, i]).
    let alice_basis: Vec<Vec<C64>> = zd
        .unitary
        .columns()
        .into_iter()
        .map(|c| c.into_iter().map(|z| z.conj()).collect())
        .collect();
    let states = [psi.clone(), phi.clone()];
    let decomp = decompose(&states, &alice_basis)?;
    let check = decomp.form_check(tol);
    if !check.passed {
        return Err(Error::FormCheckFailed {
            residual: check.worst_residual,
        });
    }
    let protocol = build_one_way_protocol(&decomp, tol)?;
    Ok(TwoStateResult {
        protocol,
        alice_basis,
        zero_diag: zd,
    })
}
