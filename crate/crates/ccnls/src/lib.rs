//! Numerical laboratory for a system of coupled Schrödinger equations with
//! quadratic derivative nonlinearities.
//!
//! The crate provides, as a library:
//!
//! * a pseudospectral solver for the frequency-truncated system on periodic
//!   grids ([`solver`], [`picard`]),
//! * the dyadic / modulation frequency toolkit used to evaluate short-time
//!   restriction norms on sampled data ([`dyadic`], [`spacetime`], [`norms`]),
//! * modified-energy functionals with frequency-dependent correction terms
//!   and their coercivity and derivative-identity diagnostics ([`energy`]),
//! * empirical ratio experiments for the bilinear / trilinear estimates and
//!   the exact box-indicator counterexample constructions ([`lab`], [`boxes`]),
//! * orchestrated convergence and continuity studies ([`study`], [`data`]),
//! * deterministic report emission and a thin command-line front end
//!   ([`report`], [`manifest`], [`cli`]).
//!
//! Run `cargo run -- <subcommand> --help` for the CLI, or see the `examples/`
//! directory for one runnable example per capability.

pub mod boxes;
pub mod cli;
pub mod container;
pub mod data;
pub mod dyadic;
pub mod energy;
pub mod error;
pub mod grid;
pub mod lab;
pub mod manifest;
pub mod nonlinearity;
pub mod norms;
pub mod picard;
pub mod report;
pub mod solver;
pub mod spacetime;
pub mod study;
pub mod system;

pub use error::{Error, Result};
