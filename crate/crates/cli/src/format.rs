//! JSON documents exchanged by the command-line tool.
//!
//! Every file is an envelope `{"kind", "dims", "payload"}`. Complex numbers
//! are `[re, im]` pairs, vectors are arrays of them and matrices are arrays of
//! rows. Bipartite vectors use the joint index `a * dimB + b`.

use std::fmt;

use locc_core::bipartite::{check_local_basis, subspace_from_vectors, ProductWitness, PureState, Subspace};
use locc_core::channel::{EnvAssistedCode, KrausPair};
use locc_core::protocol::{Label, LabeledVector, OneWayProtocol, Party};
use locc_core::{CMatrix, C64};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Subspace,
    States,
    Protocol,
    Kraus,
    Report,
    Code,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).map_err(|_| fmt::Error)?;
        write!(f, "{}", s.as_str().unwrap_or("?"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    pub kind: Kind,
    pub dims: Vec<usize>,
    pub payload: Value,
}

/// A complex scalar as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cx(pub f64, pub f64);

impl From<C64> for Cx {
    fn from(z: C64) -> Self {
        Cx(z.re, z.im)
    }
}

impl From<Cx> for C64 {
    fn from(z: Cx) -> Self {
        C64::new(z.0, z.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorsPayload {
    pub vectors: Vec<Vec<Cx>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RejectTag {
    Reject,
}

/// A state index, or `"reject"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelRepr {
    State(usize),
    Reject(RejectTag),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledRepr {
    pub label: LabelRepr,
    pub vector: Vec<Cx>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartyRepr {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolPayload {
    pub first_party: PartyRepr,
    pub first_basis: Vec<Vec<Cx>>,
    pub second: Vec<Vec<LabeledRepr>>,
    /// The states the protocol was built for, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<Vec<Cx>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrausPayload {
    pub k0: Vec<Vec<Cx>>,
    pub k1: Vec<Vec<Cx>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodePayload {
    pub codewords: Vec<Vec<Cx>>,
    pub env_basis: Vec<Vec<Cx>>,
    pub receiver_measurements: Vec<Vec<LabeledRepr>>,
}

pub fn parse(text: &str) -> Result<Envelope, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("malformed document: {e}")))
}

/// Canonical text: keys sorted, one line per vector, trailing newline.
pub fn render(env: &Envelope) -> String {
    let value = serde_json::to_value(env).expect("envelopes always serialize");
    let mut s = String::new();
    write_value(&mut s, &value, 0);
    s.push('\n');
    s
}

fn is_scalar(v: &Value) -> bool {
    !v.is_array() && !v.is_object()
}

/// Scalars and arrays of scalars (complex numbers) stay inline.
fn is_flat(v: &Value) -> bool {
    match v {
        Value::Array(items) => items
            .iter()
            .all(|x| is_scalar(x) || x.as_array().is_some_and(|a| a.iter().all(is_scalar))),
        Value::Object(map) => map.is_empty(),
        _ => true,
    }
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.extend(std::iter::repeat_n("  ", d));
    match v {
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (i, (k, x)) in map.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&serde_json::to_string(k).expect("string keys"));
                out.push_str(": ");
                write_value(out, x, depth + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
        Value::Array(items) if !is_flat(v) => {
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, x, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        _ => out.push_str(&serde_json::to_string(v).expect("values serialize")),
    }
}

impl Envelope {
    pub fn new<T: Serialize>(kind: Kind, dims: Vec<usize>, payload: &T) -> Self {
        Self {
            kind,
            dims,
            payload: serde_json::to_value(payload).expect("payloads always serialize"),
        }
    }

    fn expect_kind(&self, allowed: &[Kind]) -> Result<(), CliError> {
        if allowed.contains(&self.kind) {
            Ok(())
        } else {
            let names: Vec<String> = allowed.iter().map(Kind::to_string).collect();
            Err(CliError::Invalid(format!(
                "expected a {} document, got {}",
                names.join(" or "),
                self.kind
            )))
        }
    }

    fn payload<T: for<'de> Deserialize<'de>>(&self) -> Result<T, CliError> {
        T::deserialize(&self.payload)
            .map_err(|e| CliError::Invalid(format!("bad {} payload: {e}", self.kind)))
    }

    fn bipartite_dims(&self) -> Result<(usize, usize), CliError> {
        match self.dims[..] {
            [a, b] if a > 0 && b > 0 => Ok((a, b)),
            _ => Err(CliError::Invalid(format!(
                "{} document needs dims [dimA, dimB], got {:?}",
                self.kind, self.dims
            ))),
        }
    }
}

pub fn to_vector(v: &[Cx]) -> Vec<C64> {
    v.iter().copied().map(C64::from).collect()
}

pub fn from_vector(v: &[C64]) -> Vec<Cx> {
    v.iter().copied().map(Cx::from).collect()
}

fn to_vectors(vs: &[Vec<Cx>]) -> Vec<Vec<C64>> {
    vs.iter().map(|v| to_vector(v)).collect()
}

fn from_vectors(vs: &[Vec<C64>]) -> Vec<Vec<Cx>> {
    vs.iter().map(|v| from_vector(v)).collect()
}

fn to_matrix(rows: &[Vec<Cx>]) -> Result<CMatrix, CliError> {
    Ok(CMatrix::from_rows(&to_vectors(rows))?)
}

fn from_matrix(m: &CMatrix) -> Vec<Vec<Cx>> {
    (0..m.rows()).map(|i| from_vector(&m.row(i))).collect()
}

fn check_finite(vs: &[Vec<C64>]) -> Result<(), CliError> {
    if vs.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(CliError::Invalid("non-finite entry".into()))
    }
}

fn check_lengths(vs: &[Vec<C64>], len: usize) -> Result<(), CliError> {
    match vs.iter().position(|v| v.len() != len) {
        Some(i) => Err(CliError::Invalid(format!(
            "vector {i} has length {}, expected {len}",
            vs[i].len()
        ))),
        None => Ok(()),
    }
}

fn bipartite_vectors(env: &Envelope) -> Result<(usize, usize, Vec<Vec<C64>>), CliError> {
    let (a, b) = env.bipartite_dims()?;
    let vs = to_vectors(&env.payload::<VectorsPayload>()?.vectors);
    check_lengths(&vs, a * b)?;
    check_finite(&vs)?;
    Ok((a, b, vs))
}

/// Reads the span of a subspace or states document.
pub fn read_subspace(env: &Envelope) -> Result<Subspace, CliError> {
    env.expect_kind(&[Kind::Subspace, Kind::States])?;
    let (a, b, vs) = bipartite_vectors(env)?;
    if vs.is_empty() {
        return Err(CliError::Invalid("subspace has no vectors".into()));
    }
    Ok(subspace_from_vectors(&vs, a, b)?)
}

/// Reads normalized bipartite states.
pub fn read_states(env: &Envelope) -> Result<Vec<PureState>, CliError> {
    env.expect_kind(&[Kind::States, Kind::Subspace])?;
    let (a, b, vs) = bipartite_vectors(env)?;
    Ok(vs
        .into_iter()
        .map(|v| PureState::from_vector(a, b, v))
        .collect::<locc_core::Result<_>>()?)
}

pub fn states_document(states: &[PureState]) -> Envelope {
    let dims = states.first().map_or(vec![], |s| vec![s.dim_a(), s.dim_b()]);
    let vectors = states.iter().map(|s| from_vector(s.vector())).collect();
    Envelope::new(Kind::States, dims, &VectorsPayload { vectors })
}

pub fn subspace_document(q: &Subspace) -> Envelope {
    Envelope::new(
        Kind::Subspace,
        vec![q.dim_a(), q.dim_b()],
        &VectorsPayload { vectors: from_vectors(&q.vectors()) },
    )
}

/// Reads an orthonormal basis of `C^dim` stored as a states document with
/// `dims: [dim]`.
pub fn read_local_basis(env: &Envelope, dim: usize) -> Result<Vec<Vec<C64>>, CliError> {
    env.expect_kind(&[Kind::States])?;
    if env.dims != [dim] {
        return Err(CliError::Invalid(format!(
            "local basis needs dims [{dim}], got {:?}",
            env.dims
        )));
    }
    let vs = to_vectors(&env.payload::<VectorsPayload>()?.vectors);
    check_finite(&vs)?;
    check_local_basis(&vs, dim)?;
    Ok(vs)
}

pub fn local_basis_document(basis: &[Vec<C64>]) -> Envelope {
    Envelope::new(
        Kind::States,
        vec![basis.len()],
        &VectorsPayload { vectors: from_vectors(basis) },
    )
}

/// Reads a product state stored as a one-vector states document.
pub fn read_witness(env: &Envelope, tol: f64) -> Result<ProductWitness, CliError> {
    let states = read_states(env)?;
    match &states[..] {
        [s] => Ok(ProductWitness::from_state(s, tol)?),
        _ => Err(CliError::Invalid(format!(
            "witness document must hold one state, found {}",
            states.len()
        ))),
    }
}

fn label_from(l: LabelRepr) -> Label {
    match l {
        LabelRepr::State(i) => Label::State(i),
        LabelRepr::Reject(_) => Label::Reject,
    }
}

fn label_to(l: Label) -> LabelRepr {
    match l {
        Label::State(i) => LabelRepr::State(i),
        Label::Reject => LabelRepr::Reject(RejectTag::Reject),
    }
}

fn measurements_from(ms: &[Vec<LabeledRepr>]) -> Vec<Vec<LabeledVector>> {
    ms.iter()
        .map(|m| {
            m.iter()
                .map(|lv| LabeledVector {
                    label: label_from(lv.label),
                    vector: to_vector(&lv.vector),
                })
                .collect()
        })
        .collect()
}

fn measurements_to(ms: &[Vec<LabeledVector>]) -> Vec<Vec<LabeledRepr>> {
    ms.iter()
        .map(|m| {
            m.iter()
                .map(|lv| LabeledRepr {
                    label: label_to(lv.label),
                    vector: from_vector(&lv.vector),
                })
                .collect()
        })
        .collect()
}

/// Protocol document; `dims` are those of the states it discriminates.
pub fn protocol_document(
    p: &OneWayProtocol,
    dims: (usize, usize),
    states: Option<&[PureState]>,
) -> Envelope {
    let payload = ProtocolPayload {
        first_party: match p.first_party {
            Party::A => PartyRepr::A,
            Party::B => PartyRepr::B,
        },
        first_basis: from_vectors(&p.first_basis),
        second: measurements_to(&p.second),
        states: states.map(|ss| ss.iter().map(|s| from_vector(s.vector())).collect()),
    };
    Envelope::new(Kind::Protocol, vec![dims.0, dims.1], &payload)
}

/// Reads a protocol and, when present, the states stored with it.
pub fn read_protocol(env: &Envelope) -> Result<(OneWayProtocol, Option<Vec<PureState>>), CliError> {
    env.expect_kind(&[Kind::Protocol])?;
    let (a, b) = env.bipartite_dims()?;
    let payload: ProtocolPayload = env.payload()?;
    let (first, second) = match payload.first_party {
        PartyRepr::A => (a, b),
        PartyRepr::B => (b, a),
    };
    let first_basis = to_vectors(&payload.first_basis);
    check_local_basis(&first_basis, first)?;
    let measurements = measurements_from(&payload.second);
    if measurements.len() != first {
        return Err(CliError::Invalid(format!(
            "protocol has {} second-party measurements for {first} first-party outcomes",
            measurements.len()
        )));
    }
    for m in &measurements {
        let vs: Vec<Vec<C64>> = m.iter().map(|lv| lv.vector.clone()).collect();
        check_finite(&vs)?;
        check_local_basis(&vs, second)?;
    }
    let protocol = OneWayProtocol {
        first_party: match payload.first_party {
            PartyRepr::A => Party::A,
            PartyRepr::B => Party::B,
        },
        first_basis,
        second: measurements,
    };
    let states = match payload.states {
        Some(vs) => {
            let doc = Envelope::new(Kind::States, vec![a, b], &VectorsPayload { vectors: vs });
            Some(read_states(&doc)?)
        }
        None => None,
    };
    Ok((protocol, states))
}

/// Kraus pair document with `dims: [d_out, d_in]`.
pub fn kraus_document(k: &KrausPair) -> Envelope {
    Envelope::new(
        Kind::Kraus,
        vec![k.d_out(), k.d_in()],
        &KrausPayload {
            k0: from_matrix(k.k0()),
            k1: from_matrix(k.k1()),
        },
    )
}

pub fn read_kraus(env: &Envelope) -> Result<KrausPair, CliError> {
    env.expect_kind(&[Kind::Kraus])?;
    let payload: KrausPayload = env.payload()?;
    let (k0, k1) = (to_matrix(&payload.k0)?, to_matrix(&payload.k1)?);
    if !k0.is_finite() || !k1.is_finite() {
        return Err(CliError::Invalid("non-finite entry".into()));
    }
    if env.dims[..] != [k0.rows(), k0.cols()] {
        return Err(CliError::Invalid(format!(
            "Kraus dims {:?} do not match a {}x{} operator",
            env.dims,
            k0.rows(),
            k0.cols()
        )));
    }
    Ok(KrausPair::new(k0, k1)?)
}

pub fn code_document(k: &KrausPair, code: &EnvAssistedCode) -> Envelope {
    Envelope::new(
        Kind::Code,
        vec![k.d_out(), k.d_in()],
        &CodePayload {
            codewords: from_vectors(&code.codewords),
            env_basis: from_vectors(&code.env_basis),
            receiver_measurements: measurements_to(&code.receiver_measurements),
        },
    )
}

pub fn read_code(env: &Envelope) -> Result<EnvAssistedCode, CliError> {
    env.expect_kind(&[Kind::Code])?;
    let payload: CodePayload = env.payload()?;
    Ok(EnvAssistedCode {
        codewords: to_vectors(&payload.codewords),
        env_basis: to_vectors(&payload.env_basis),
        receiver_measurements: measurements_from(&payload.receiver_measurements),
    })
}

pub fn report_document<T: Serialize>(report: &T) -> Envelope {
    Envelope::new(Kind::Report, vec![], report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use locc_core::bipartite::bell;

    #[test]
    fn complex_numbers_are_pairs() {
        let s = serde_json::to_string(&Cx(1.5, -0.25)).unwrap();
        assert_eq!(s, "[1.5,-0.25]");
    }

    #[test]
    fn labels_accept_index_or_reject() {
        let l: LabelRepr = serde_json::from_str("3").unwrap();
        assert_eq!(l, LabelRepr::State(3));
        let l: LabelRepr = serde_json::from_str("\"reject\"").unwrap();
        assert_eq!(l, LabelRepr::Reject(RejectTag::Reject));
        assert!(serde_json::from_str::<LabelRepr>("\"keep\"").is_err());
    }

    #[test]
    fn states_round_trip() {
        let doc = states_document(&[bell::phi_plus(), bell::phi_minus()]);
        let text = render(&doc);
        let back = parse(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(render(&back), text);
        assert_eq!(read_states(&back).unwrap()[1], bell::phi_minus());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"kind":"states","dims":[2,2],"payload":{"vectors":[]},"extra":1}"#;
        assert!(matches!(parse(text), Err(CliError::Invalid(_))));
    }

    #[test]
    fn kraus_dims_must_match() {
        let k = KrausPair::amplitude_damping(0.3).unwrap();
        let mut doc = kraus_document(&k);
        assert_eq!(read_kraus(&doc).unwrap(), k);
        doc.dims = vec![3, 2];
        assert!(matches!(read_kraus(&doc), Err(CliError::Invalid(_))));
    }
}
