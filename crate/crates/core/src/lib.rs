//! Reparametrization-invariant mechanics.
//!
//! Homogeneous Lagrangians, Euler-Lagrange flows in arbitrary gauges,
//! extended Hamiltonians on phase-space-time, a relativistic charged
//! particle in background fields, and one-dimensional wave functions built
//! from the extended constraint.

pub mod diff;
pub mod el;
pub mod error;
pub mod ext_hamiltonian;
pub mod extended_phase;
pub mod field;
pub mod interp;
pub mod lagrangian;
pub mod ode;
pub mod quad;
pub mod quantize;
pub mod rel_particle;

pub use error::{Error, Result};
pub use extended_phase::Constants;

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeExample;
