//! Desk-scale numerical laboratory for learning disordered spin systems from
//! time-ordered and out-of-time-order correlators.
//!
//! The crate is organized around a small set of layers:
//!
//! * [`operators`] — Pauli-string algebra, state vectors, Haar sampling.
//! * [`system`] — geometries, disorder realizations, and the Floquet/Hamiltonian
//!   terms that define an experiment.
//! * [`evolve`] — matrix-free Krylov propagation and Floquet scheduling,
//!   including imperfect (spin-only) time reversal with a cavity mode.
//! * [`correlate`] — Monte-Carlo and exact-trace estimators for every
//!   correlator family, with read-out-noise injection.
//! * [`fisher`] — squared-derivative Fisher information of couplings, with
//!   common-random-number finite differences and `1/N_psi` extrapolation.
//! * [`disjoint`] — the disjoint-unitary distinguishing task.
//! * [`pheno`] — closed-form phenomenological predictions and scaling fits.
//!
//! Everything is deterministic given a master seed; see [`seed::SeedTree`].

pub mod correlate;
pub mod dense;
pub mod disjoint;
pub mod error;
pub mod evolve;
pub mod exec;
pub mod fisher;
pub mod operators;
pub mod pheno;
pub mod seed;
pub mod system;
pub mod table;

pub use error::{CoreError, Result};
