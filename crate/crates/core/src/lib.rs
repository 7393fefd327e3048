//! Singular symplectic structures produced by non-canonical changes of
//! coordinates in celestial mechanics.
//!
//! The crate is layered bottom-up:
//!
//! * [`symexpr`]: exact rational expression algebra with a text parser.
//! * [`exterior`]: differential forms, vector fields, pullbacks.
//! * [`classify`]: symplectic / b^m-symplectic / m-folded verdicts.
//! * [`catalog`]: the Levi-Civita, elliptic and McGehee models and normal forms.
//! * [`desing`]: f_ε-desingularization of b^{2k}-forms.
//! * [`dynamics`]: Hamiltonian vector fields, time changes and an adaptive integrator.
//! * [`contact`]: b-contact forms and Reeb fields.
//! * [`cli`] and [`verify`]: the command-line front end and its self-check suite.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod cli;
pub mod classify;
pub mod contact;
pub mod desing;
pub mod dynamics;
pub mod exterior;
pub mod linalg;
pub mod symexpr;
pub mod verify;
