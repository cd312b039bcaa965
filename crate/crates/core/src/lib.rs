//! Numerical laboratory for standing waves of the nonlinear Schrödinger
//! equation with δ and δ′ point interactions, on the real line and on
//! star graphs.
//!
//! The pipeline is:
//!
//! * [`profiles`] evaluates the closed-form standing-wave profiles and checks
//!   them against the stationary equation and the vertex conditions;
//! * [`operators`] discretizes the linearized operators `L1`, `L2` with a
//!   mass-lumped finite-element scheme and counts negative eigenvalues by
//!   symmetric factorization;
//! * [`slope`] computes `‖Φ_ω‖²` and its frequency derivative;
//! * [`gss`] turns the counts and the slope sign into a stability verdict;
//! * [`dynamics`] evolves perturbed waves with a Strang/Crank–Nicolson
//!   scheme to confirm verdicts empirically.

pub mod banded;
pub mod domain;
pub mod dynamics;
pub mod error;
pub mod gss;
pub mod operators;
pub mod profiles;
pub mod quadrature;
pub mod roots;
pub mod slope;
pub mod snapshot;

pub use domain::{DiscreteDomain, DomainKind, Field};
pub use error::{Error, Result};
pub use profiles::{InteractionModel, ModelKind, ProfileSpec, Variant};
