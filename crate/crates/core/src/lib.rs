//! Constructive local discrimination for bipartite subspaces.
//!
//! Every subspace of a `2 ⊗ n` system has an orthonormal basis that the qubit
//! holder and the other party can tell apart perfectly by a one-way protocol:
//! the qubit holder measures in a basis of her choice, announces the outcome,
//! and the second party finishes with a projective measurement. This crate
//! builds that basis and the protocol explicitly, along with
//!
//! - a one-way projective protocol for any three-dimensional subspace that
//!   contains a known product state,
//! - a two-state protocol for any pair of orthogonal bipartite pure states,
//! - an environment-assisted zero-error code at rate `log2 d_in` for any
//!   channel with two Kraus operators,
//!
//! and verifies each one by computing its confusion matrix exactly.
//!
//! ```
//! use locc_core::{bipartite, locc_basis, protocol};
//!
//! let q = bipartite::haar_random_subspace(2, 5, 7, 42).unwrap();
//! let rotated = locc_basis::locc_basis(&q, None).unwrap();
//! let proto = locc_basis::protocol_for(&rotated, 1e-10).unwrap();
//! assert!(protocol::verify_perfect(&proto, &rotated.rotated_basis, 1e-9).unwrap());
//! ```

pub mod bipartite;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod locc_basis;
pub mod lpcc3;
pub mod protocol;
pub mod suite;
pub mod zero_diag;

pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
