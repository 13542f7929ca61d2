//! Randomized verification suite.
//!
//! Each criterion runs independent trials in parallel. Trial `t` of criterion
//! `name` draws from its own generator seeded by `derive_seed(seed, name, t)`,
//! so parallel and serial runs produce the same numbers.

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bipartite::{
    bell, computational_basis, haar_random_subspace_with, planted_product_subspace_with,
    walgate_form_check,
};
use crate::channel::{
    apply_channel, apply_channel_via_dilation, env_assisted_code, verify_capacity, KrausPair,
};
use crate::error::Result;
use crate::linalg::{gaussian_vector, haar_random_unitary_with, seeded_rng, CMatrix, C64};
use crate::locc_basis::locc_basis_with_protocol;
use crate::lpcc3::{lpcc3_protocol, lpcc3_protocol_second_first};
use crate::protocol::{
    confusion_matrix, monte_carlo_confusion, verify_perfect, Label, LabeledVector, OneWayProtocol,
    Party,
};
use crate::zero_diag::{two_state_protocol, zero_diagonal_unitary, DEFAULT_MAX_ITER};

/// Construction tolerance handed to the builders.
pub const CONSTRUCTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Overrides the per-criterion trial counts.
    pub trials: Option<usize>,
    /// Overrides every verification threshold (not the time limits).
    pub tol: Option<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 2011,
            trials: None,
            tol: None,
        }
    }
}

impl SuiteConfig {
    fn trials(&self, default: usize) -> usize {
        self.trials.unwrap_or(default)
    }

    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

/// One measured quantity and its pass threshold (`worst <= threshold`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub worst: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, worst: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            worst,
            threshold,
            passed: worst <= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: String,
    pub trials: usize,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Construction errors, as `trial: message`.
    pub errors: Vec<String>,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub passed: bool,
    pub criteria: Vec<CriterionReport>,
}

/// FNV-1a of the name mixed with the seed and index through SplitMix64.
pub fn derive_seed(seed: u64, name: &str, index: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix(splitmix(seed ^ h) ^ index)
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub const CRITERIA: [(u8, &str); 8] = [
    (1, "two-by-n basis"),
    (2, "preselected first-party basis"),
    (3, "zero-diagonal engine"),
    (4, "two-state discrimination"),
    (5, "three-dimensional subspace with product state"),
    (6, "two-Kraus channel codes"),
    (7, "oracle equivalence"),
    (8, "negative controls"),
];

pub fn run_suite(cfg: &SuiteConfig) -> SuiteReport {
    let criteria: Vec<CriterionReport> = CRITERIA.iter().map(|&(id, _)| run_criterion(id, cfg)).collect();
    SuiteReport {
        seed: cfg.seed,
        passed: criteria.iter().all(|c| c.passed),
        criteria,
    }
}

pub fn run_criterion(id: u8, cfg: &SuiteConfig) -> CriterionReport {
    let start = Instant::now();
    let name = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map_or("unknown", |c| c.1);
    let outcome = match id {
        1 => two_by_n(cfg),
        2 => preselection(cfg),
        3 => zero_diagonal(cfg),
        4 => two_state(cfg),
        5 => three_dim(cfg),
        6 => channels(cfg),
        7 => oracles(cfg),
        8 => negative_controls(cfg),
        _ => Outcome {
            trials: 0,
            checks: vec![],
            errors: vec![format!("no criterion {id}")],
        },
    };
    let elapsed = start.elapsed().as_secs_f64();
    let mut checks = outcome.checks;
    if let Some(limit) = time_limit(id) {
        checks.push(Check::new("runtime_s", elapsed, limit));
    }
    CriterionReport {
        id,
        name: name.into(),
        trials: outcome.trials,
        passed: outcome.errors.is_empty() && checks.iter().all(|c| c.passed),
        checks,
        errors: outcome.errors,
        elapsed_ms: elapsed * 1e3,
    }
}

fn time_limit(id: u8) -> Option<f64> {
    match id {
        1 | 6 => Some(60.0),
        3 => Some(30.0),
        _ => None,
    }
}

struct Outcome {
    trials: usize,
    checks: Vec<Check>,
    errors: Vec<String>,
}

/// Runs `trials` independent trials, each returning one value per metric, and
/// folds them into worst-case checks.
fn run_trials<F>(
    cfg: &SuiteConfig,
    name: &str,
    trials: usize,
    metrics: &[(&str, f64)],
    trial: F,
) -> Outcome
where
    F: Fn(usize, &mut ChaCha8Rng) -> Result<Vec<f64>> + Sync,
{
    let results: Vec<Result<Vec<f64>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeded_rng(derive_seed(cfg.seed, name, t as u64));
            trial(t, &mut rng)
        })
        .collect();
    let mut worst = vec![0.0f64; metrics.len()];
    let mut errors = Vec::new();
    for (t, r) in results.into_iter().enumerate() {
        match r {
            Ok(values) => {
                for (w, v) in worst.iter_mut().zip(values) {
                    // NaN counts as a failure.
                    *w = if v.is_nan() { f64::INFINITY } else { w.max(v) };
                }
            }
            Err(e) => errors.push(format!("{t}: {e}")),
        }
    }
    Outcome {
        trials,
        checks: metrics
            .iter()
            .zip(worst)
            .map(|(&(m, threshold), w)| Check::new(m, w, threshold))
            .collect(),
        errors,
    }
}

fn two_by_n(cfg: &SuiteConfig) -> Outcome {
    let tol = cfg.tol(1e-9);
    run_trials(
        cfg,
        "two-by-n",
        cfg.trials(200),
        &[("form_residual", tol), ("decode_error", tol)],
        |t, rng| {
            let n = 2 + t % 7;
            let d = rng.random_range(1..=2 * n);
            let q = haar_random_subspace_with(rng, 2, n, d)?;
            let alice = haar_random_unitary_with(rng, 2).columns();
            two_by_n_metrics(&q, &alice)
        },
    )
}

fn two_by_n_metrics(q: &crate::bipartite::Subspace, alice: &[Vec<C64>]) -> Result<Vec<f64>> {
    let (r, p) = locc_basis_with_protocol(q, Some(alice), CONSTRUCTION_TOL)?;
    let form = walgate_form_check(&r.rotated_basis, alice, CONSTRUCTION_TOL)?;
    let cm = confusion_matrix(&p, &r.rotated_basis)?;
    Ok(vec![form.worst_residual, 1.0 - cm.min_diagonal()])
}

fn preselection(cfg: &SuiteConfig) -> Outcome {
    let tol = cfg.tol(1e-9);
    let mut rng = seeded_rng(derive_seed(cfg.seed, "preselection-subspace", 0));
    let q = match haar_random_subspace_with(&mut rng, 2, 5, 6) {
        Ok(q) => q,
        Err(e) => {
            return Outcome {
                trials: 0,
                checks: vec![],
                errors: vec![e.to_string()],
            }
        }
    };
    run_trials(
        cfg,
        "preselection",
        cfg.trials(50),
        &[("form_residual", tol), ("decode_error", tol)],
        |_, rng| {
            let alice = haar_random_unitary_with(rng, 2).columns();
            two_by_n_metrics(&q, &alice)
        },
    )
}

pub(crate) fn random_traceless(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let mut m = CMatrix::from_row_major(n, n, gaussian_vector(rng, n * n)).expect("n*n entries");
    let shift = m.trace() / n as f64;
    for i in 0..n {
        m[(i, i)] -= shift;
    }
    m
}

fn zero_diagonal(cfg: &SuiteConfig) -> Outcome {
    let residual_tol = cfg.tol(1e-10);
    let unitary_tol = cfg.tol(1e-12);
    run_trials(
        cfg,
        "zero-diagonal",
        cfg.trials(500),
        &[
            ("diagonal_residual", residual_tol),
            ("unitarity", unitary_tol),
            ("deviation_increase", 0.0),
        ],
        |t, rng| {
            let n = 2 + t % 11;
            let m = random_traceless(rng, n);
            let r = zero_diagonal_unitary(&m, 0, residual_tol, DEFAULT_MAX_ITER)?;
            let increase = r
                .deviation_history
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::NEG_INFINITY, f64::max)
                .max(0.0);
            Ok(vec![r.residual, r.unitary.unitarity_residual(), increase])
        },
    )
}

fn two_state(cfg: &SuiteConfig) -> Outcome {
    let tol = cfg.tol(1e-9);
    run_trials(
        cfg,
        "two-state",
        cfg.trials(200),
        &[("confusion_distance", tol)],
        |_, rng| {
            let m = rng.random_range(2..=6);
            let n = rng.random_range(2..=6);
            let q = haar_random_subspace_with(rng, m, n, 2)?;
            let (a, b) = (&q.basis()[0], &q.basis()[1]);
            let r = two_state_protocol(a, b, false, CONSTRUCTION_TOL)?;
            let cm = confusion_matrix(&r.protocol, q.basis())?;
            Ok(vec![cm.distance_from_identity()])
        },
    )
}

fn three_dim(cfg: &SuiteConfig) -> Outcome {
    let tol = cfg.tol(1e-9);
    run_trials(
        cfg,
        "three-dim",
        cfg.trials(100),
        &[("decode_error_first", tol), ("decode_error_second", tol)],
        |t, rng| {
            let (m, n) = (3 + t % 3, 3 + (t / 3) % 3);
            let (q, w) = planted_product_subspace_with(rng, m, n)?;
            let a = lpcc3_protocol(&q, &w, CONSTRUCTION_TOL)?;
            let b = lpcc3_protocol_second_first(&q, &w, CONSTRUCTION_TOL)?;
            let ea = 1.0 - confusion_matrix(&a.protocol, &a.basis)?.min_diagonal();
            let eb = 1.0 - confusion_matrix(&b.protocol, &b.basis)?.min_diagonal();
            Ok(vec![ea, eb])
        },
    )
}

fn channel_metrics(k: &KrausPair, tol: f64) -> Result<Vec<f64>> {
    let code = env_assisted_code(k, None)?;
    let report = verify_capacity(k, &code, tol)?;
    let expected = (k.d_in() as f64).log2();
    let bits_gap = report.bits.map_or(f64::INFINITY, |b| (b - expected).abs());
    Ok(vec![1.0 - report.min_success, bits_gap])
}

fn channels(cfg: &SuiteConfig) -> Outcome {
    let tol = cfg.tol(1e-9);
    let metrics = [("decode_error", tol), ("bits_gap", 0.0)];
    let random = run_trials(cfg, "channels", cfg.trials(100), &metrics, |t, rng| {
        let d_in = 2 + t % 7;
        let u = haar_random_unitary_with(rng, 2 * d_in);
        let k = KrausPair::from_isometry(&u.block(0, 0, 2 * d_in, d_in))?;
        channel_metrics(&k, tol)
    });
    let sweep = run_trials(cfg, "amplitude-damping", 11, &metrics, |t, _| {
        let k = KrausPair::amplitude_damping(t as f64 / 10.0)?;
        channel_metrics(&k, tol)
    });
    merge(random, sweep)
}

fn merge(a: Outcome, b: Outcome) -> Outcome {
    let checks = a
        .checks
        .into_iter()
        .zip(b.checks)
        .map(|(x, y)| Check::new(&x.name, x.worst.max(y.worst), x.threshold))
        .collect();
    let mut errors = a.errors;
    errors.extend(b.errors.into_iter().map(|e| format!("sweep {e}")));
    Outcome {
        trials: a.trials + b.trials,
        checks,
        errors,
    }
}

fn random_protocol(rng: &mut ChaCha8Rng, dim_a: usize, dim_b: usize, d: usize) -> OneWayProtocol {
    let first_basis = haar_random_unitary_with(rng, dim_a).columns();
    let second = (0..dim_a)
        .map(|_| {
            haar_random_unitary_with(rng, dim_b)
                .columns()
                .into_iter()
                .map(|vector| {
                    let k = rng.random_range(0..=d);
                    LabeledVector {
                        label: if k == d { Label::Reject } else { Label::State(k) },
                        vector,
                    }
                })
                .collect()
        })
        .collect();
    OneWayProtocol {
        first_party: Party::A,
        first_basis,
        second,
    }
}

/// Largest `|mc - p| / se` over all entries, with `se = sqrt(p(1-p)/shots)`.
pub fn max_z_score(exact: &[Vec<f64>], sampled: &[Vec<f64>], shots: usize) -> f64 {
    let mut worst = 0.0f64;
    for (re, rs) in exact.iter().zip(sampled) {
        for (&p, &f) in re.iter().zip(rs) {
            let p = p.clamp(0.0, 1.0);
            let diff = (f - p).abs();
            let se = (p * (1.0 - p) / shots as f64).sqrt();
            let z = if diff == 0.0 { 0.0 } else if se == 0.0 { f64::INFINITY } else { diff / se };
            worst = worst.max(z);
        }
    }
    worst
}

pub const MONTE_CARLO_SHOTS: usize = 100_000;

fn oracles(cfg: &SuiteConfig) -> Outcome {
    let tol = cfg.tol(1e-12);
    let z_limit = 5.0;
    let mc = run_trials(cfg, "monte-carlo", cfg.trials(20), &[("z_score", z_limit)], |t, rng| {
        let n = 2 + t % 4;
        let d = rng.random_range(2..=2 * n);
        let q = haar_random_subspace_with(rng, 2, n, d)?;
        // Even trials check a constructed protocol, odd ones a random protocol
        // with a nontrivial confusion matrix.
        let p = if t % 2 == 0 {
            locc_basis_with_protocol(&q, None, CONSTRUCTION_TOL)?.1
        } else {
            random_protocol(rng, 2, n, d)
        };
        let states = if t % 2 == 0 {
            locc_basis_with_protocol(&q, None, CONSTRUCTION_TOL)?.0.rotated_basis
        } else {
            q.basis().to_vec()
        };
        let exact = confusion_matrix(&p, &states)?;
        let sampled = monte_carlo_confusion(&p, &states, MONTE_CARLO_SHOTS, rng.random())?;
        Ok(vec![max_z_score(&exact.rows, &sampled.rows, MONTE_CARLO_SHOTS)])
    });
    let dual = run_trials(cfg, "dual-route", cfg.trials(100), &[("route_difference", tol)], |t, rng| {
        let d_in = 2 + t % 5;
        let d_out = 1 + rng.random_range(d_in.div_ceil(2)..=d_in + 1);
        let u = haar_random_unitary_with(rng, 2 * d_out);
        let k = KrausPair::from_isometry(&u.block(0, 0, 2 * d_out, d_in))?;
        let g = CMatrix::from_row_major(d_in, d_in, gaussian_vector(rng, d_in * d_in))?;
        let p = &g * &g.adjoint();
        let rho = p.scale(C64::new(1.0, 0.0) / p.trace());
        let a = apply_channel(&k, &rho)?;
        let b = apply_channel_via_dilation(&k, &rho)?;
        Ok(vec![(&a - &b).frobenius_norm()])
    });
    Outcome {
        trials: mc.trials + dual.trials,
        checks: mc.checks.into_iter().chain(dual.checks).collect(),
        errors: mc.errors.into_iter().chain(dual.errors).collect(),
    }
}

/// Rotates the first two second-party vectors after outcome `a` by `angle`.
pub fn perturb_second_measurement(p: &OneWayProtocol, a: usize, angle: f64) -> OneWayProtocol {
    let mut q = p.clone();
    let (c, s) = (angle.cos(), angle.sin());
    let m = &mut q.second[a];
    if m.len() >= 2 {
        let (u, v) = (m[0].vector.clone(), m[1].vector.clone());
        m[0].vector = u.iter().zip(&v).map(|(x, y)| x * c - y * s).collect();
        m[1].vector = u.iter().zip(&v).map(|(x, y)| x * s + y * c).collect();
    }
    q
}

fn negative_controls(cfg: &SuiteConfig) -> Outcome {
    let tol = cfg.tol(1e-9);
    let mut checks = Vec::new();
    let mut errors = Vec::new();

    // {Φ+, Φ-} in the computational basis: overlap exactly 1/2
    match walgate_form_check(
        &[bell::phi_plus(), bell::phi_minus()],
        &computational_basis(2),
        CONSTRUCTION_TOL,
    ) {
        Ok(f) => {
            checks.push(Check::new("phi_pair_fails", if f.passed { 1.0 } else { 0.0 }, 0.0));
            checks.push(Check::new("phi_pair_residual_gap", (f.worst_residual - 0.5).abs(), tol));
        }
        Err(e) => errors.push(format!("phi pair: {e}")),
    }

    // Swapping the receiver's labels must be detected.
    let flagged = (|| -> Result<f64> {
        let k = KrausPair::amplitude_damping(0.5)?;
        let mut code = env_assisted_code(&k, None)?;
        for m in &mut code.receiver_measurements {
            for lv in m.iter_mut() {
                lv.label = match lv.label {
                    Label::State(0) => Label::State(1),
                    Label::State(1) => Label::State(0),
                    other => other,
                };
            }
        }
        let r = verify_capacity(&k, &code, tol)?;
        Ok(if r.bits.is_none() { 0.0 } else { 1.0 })
    })();
    match flagged {
        Ok(v) => checks.push(Check::new("swapped_code_accepted", v, 0.0)),
        Err(e) => errors.push(format!("swapped code: {e}")),
    }

    // Rotating one second-party measurement breaks perfect decoding.
    let perturbed = run_trials(cfg, "perturbed", cfg.trials(20), &[("perturbed_still_perfect", 0.0)], |_, rng| {
        let q = haar_random_subspace_with(rng, 2, 4, 4)?;
        let (r, p) = locc_basis_with_protocol(&q, None, CONSTRUCTION_TOL)?;
        let bent = perturb_second_measurement(&p, 0, 0.1);
        let still = verify_perfect(&bent, &r.rotated_basis, tol)?;
        Ok(vec![if still { 1.0 } else { 0.0 }])
    });
    checks.extend(perturbed.checks);
    errors.extend(perturbed.errors);

    Outcome {
        trials: 2 + perturbed.trials,
        checks,
        errors,
    }
}
