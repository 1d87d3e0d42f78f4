//! Exact null-control synthesis for conformable-fractional, non-autonomous
//! parabolic systems with nonlocal initial conditions.
//!
//! The crate is organized bottom-up:
//!
//! * [`calculus`] conformable derivatives and α-integrals, the time transform
//!   `t ↦ t^α/α`, and a property suite for the algebraic rules.
//! * [`spectral`] the sine eigenbasis on `(0, π)` and the diagonal evolution
//!   operator `Ψ_α(t, s)`.
//! * [`control`] the operators `L` and `N`, the controllability Gramian and
//!   minimum-norm null controls.
//! * [`mild`] the semilinear nonlocal problem, solved by damped Picard
//!   iteration with the control re-synthesized in the loop.
//! * [`scenario`] configuration files, reports, trajectory CSV and the
//!   command runner behind the `fracnull` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod control;
pub mod error;
pub mod mild;
pub mod scenario;
pub mod spectral;

pub use error::{Error, Result};
