use std::path::Path;

use locc_core::bipartite::{walgate_form_check, PureState};
use locc_core::channel::{env_assisted_code, verify_capacity};
use locc_core::locc_basis::{locc_basis_with_protocol, span_residual};
use locc_core::lpcc3::{find_product_witness, lpcc3_protocol, lpcc3_protocol_second_first};
use locc_core::protocol::{confusion_matrix, monte_carlo_confusion, verify_perfect, OneWayProtocol};
use locc_core::suite::{max_z_score, run_suite, SuiteConfig};
use locc_core::zero_diag::two_state_protocol;
use serde::Serialize;

use crate::format::{self, render, report_document};
use crate::{read_document, write_text, Cli, CliError, Command, Common};

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let c = &cli.common;
    match &cli.command {
        Command::Basis {
            input,
            alice_basis,
            basis_out,
        } => basis(c, input, alice_basis.as_deref(), basis_out.as_deref()),
        Command::Check {
            input,
            alice_basis,
            protocol,
        } => check(c, input, alice_basis.as_deref(), protocol.as_deref()),
        Command::TwoState {
            input,
            fixed_first_axis,
        } => two_state(c, input, *fixed_first_axis),
        Command::Three {
            input,
            witness,
            find_witness: _,
            trials,
            swap_roles,
        } => three(c, input, witness.as_deref(), *trials, *swap_roles),
        Command::Channel {
            input,
            env_basis,
            code_out,
        } => channel(c, input, env_basis.as_deref(), code_out.as_deref()),
        Command::Simulate {
            protocol,
            input,
            shots,
        } => simulate(c, protocol, input.as_deref(), *shots),
        Command::Suite { trials } => suite(c, *trials),
    }
}

fn emit_protocol(
    c: &Common,
    p: &OneWayProtocol,
    states: &[PureState],
) -> Result<(), CliError> {
    if !verify_perfect(p, states, c.tol())? {
        let cm = confusion_matrix(p, states)?;
        return Err(CliError::Failed(format!(
            "protocol does not verify (distance from identity {:e})",
            cm.distance_from_identity()
        )));
    }
    let dims = (states[0].dim_a(), states[0].dim_b());
    let doc = format::protocol_document(p, dims, Some(states));
    write_text(c.out.as_deref(), &render(&doc))
}

fn basis(
    c: &Common,
    input: &Path,
    alice_basis: Option<&Path>,
    basis_out: Option<&Path>,
) -> Result<(), CliError> {
    let q = format::read_subspace(&read_document(input)?)?;
    if q.dim_a() != 2 {
        return Err(locc_core::Error::QubitRequired(q.dim_a()).into());
    }
    let alice = alice_basis
        .map(|p| format::read_local_basis(&read_document(p)?, 2))
        .transpose()?;
    let (r, p) = locc_basis_with_protocol(&q, alice.as_deref(), c.tol())?;
    let drift = span_residual(&q, &r);
    if drift > c.tol() {
        return Err(CliError::Failed(format!("rotated basis left the subspace ({drift:e})")));
    }
    emit_protocol(c, &p, &r.rotated_basis)?;
    if let Some(path) = basis_out {
        write_text(Some(path), &render(&format::states_document(&r.rotated_basis)))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct FormReport {
    passed: bool,
    worst_residual: f64,
}

#[derive(Serialize)]
struct ProtocolReport {
    passed: bool,
    distance_from_identity: f64,
    confusion: Vec<Vec<f64>>,
}

fn check(
    c: &Common,
    input: &Path,
    alice_basis: Option<&Path>,
    protocol: Option<&Path>,
) -> Result<(), CliError> {
    let states = format::read_states(&read_document(input)?)?;
    if states.is_empty() {
        return Err(CliError::Invalid("no states".into()));
    }
    let passed = if let Some(path) = protocol {
        let (p, _) = format::read_protocol(&read_document(path)?)?;
        let cm = confusion_matrix(&p, &states)?;
        let report = ProtocolReport {
            passed: verify_perfect(&p, &states, c.tol())?,
            distance_from_identity: cm.distance_from_identity(),
            confusion: cm.rows,
        };
        write_text(c.out.as_deref(), &render(&report_document(&report)))?;
        report.passed
    } else {
        let basis = match alice_basis {
            Some(p) => format::read_local_basis(&read_document(p)?, states[0].dim_a())?,
            None => locc_core::bipartite::computational_basis(states[0].dim_a()),
        };
        let f = walgate_form_check(&states, &basis, c.tol())?;
        let report = FormReport {
            passed: f.passed,
            worst_residual: f.worst_residual,
        };
        write_text(c.out.as_deref(), &render(&report_document(&report)))?;
        report.passed
    };
    if passed {
        Ok(())
    } else {
        Err(CliError::Failed("check did not pass".into()))
    }
}

fn two_state(c: &Common, input: &Path, fixed_first_axis: bool) -> Result<(), CliError> {
    let states = format::read_states(&read_document(input)?)?;
    let [psi, phi] = &states[..] else {
        return Err(CliError::Invalid(format!("expected two states, found {}", states.len())));
    };
    let r = two_state_protocol(psi, phi, fixed_first_axis, c.tol())?;
    emit_protocol(c, &r.protocol, &states)
}

fn three(
    c: &Common,
    input: &Path,
    witness: Option<&Path>,
    attempts: usize,
    swap_roles: bool,
) -> Result<(), CliError> {
    let q = format::read_subspace(&read_document(input)?)?;
    if q.dim() != 3 {
        return Err(CliError::Invalid(format!("subspace dimension must be 3 (got {})", q.dim())));
    }
    let w = match witness {
        Some(p) => {
            let w = format::read_witness(&read_document(p)?, c.tol())?;
            w.validate(&q, c.tol())?;
            w
        }
        None => find_product_witness(&q, attempts, c.seed)?,
    };
    let r = if swap_roles {
        lpcc3_protocol_second_first(&q, &w, c.tol())?
    } else {
        lpcc3_protocol(&q, &w, c.tol())?
    };
    emit_protocol(c, &r.protocol, &r.basis)
}

fn channel(
    c: &Common,
    input: &Path,
    env_basis: Option<&Path>,
    code_out: Option<&Path>,
) -> Result<(), CliError> {
    let k = format::read_kraus(&read_document(input)?)?;
    let env = env_basis
        .map(|p| format::read_local_basis(&read_document(p)?, 2))
        .transpose()?;
    let code = env_assisted_code(&k, env.as_deref())?;
    let report = verify_capacity(&k, &code, c.tol())?;
    if let Some(path) = code_out {
        write_text(Some(path), &render(&format::code_document(&k, &code)))?;
    }
    write_text(c.out.as_deref(), &render(&report_document(&report)))?;
    match report.bits {
        Some(_) => Ok(()),
        None => Err(CliError::Failed(format!(
            "code does not verify (worst success {})",
            report.min_success
        ))),
    }
}

#[derive(Serialize)]
struct SimulationReport {
    shots: usize,
    seed: u64,
    exact: Vec<Vec<f64>>,
    sampled: Vec<Vec<f64>>,
    max_z_score: f64,
}

fn simulate(
    c: &Common,
    protocol: &Path,
    input: Option<&Path>,
    shots: usize,
) -> Result<(), CliError> {
    let (p, stored) = format::read_protocol(&read_document(protocol)?)?;
    let states = match input {
        Some(path) => format::read_states(&read_document(path)?)?,
        None => stored.ok_or_else(|| {
            CliError::Invalid("protocol carries no states; pass --in".into())
        })?,
    };
    if shots == 0 {
        return Err(CliError::Invalid("shots must be positive".into()));
    }
    let exact = confusion_matrix(&p, &states)?;
    let sampled = monte_carlo_confusion(&p, &states, shots, c.seed)?;
    let report = SimulationReport {
        shots,
        seed: c.seed,
        max_z_score: max_z_score(&exact.rows, &sampled.rows, shots),
        exact: exact.rows,
        sampled: sampled.rows,
    };
    write_text(c.out.as_deref(), &render(&report_document(&report)))
}

fn suite(c: &Common, trials: Option<usize>) -> Result<(), CliError> {
    let report = run_suite(&SuiteConfig {
        seed: c.seed,
        trials,
        tol: c.tol,
    });
    write_text(c.out.as_deref(), &render(&report_document(&report)))?;
    for r in report.criteria.iter().filter(|r| !r.passed) {
        for k in r.checks.iter().filter(|k| !k.passed) {
            eprintln!(
                "criterion {} ({}): {} = {:e} exceeds {:e}",
                r.id, r.name, k.name, k.worst, k.threshold
            );
        }
        for e in &r.errors {
            eprintln!("criterion {} ({}): trial {e}", r.id, r.name);
        }
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Failed("suite reported failures".into()))
    }
}
