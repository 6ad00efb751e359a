//! Numerical laboratory for the frustrated ferromagnetic/antiferromagnetic
//! (F-AF) classical spin chain with nearest and next-nearest neighbour
//! couplings.
//!
//! The crate is organised bottom-up:
//!
//! * [`spin`]: lattice energies, ground states, the periodic-type boundary
//!   condition and the planar symmetries.
//! * [`chirality`]: the order parameter `u -> theta -> w -> z`, its inverse,
//!   jump counting and `tanh` profile fitting.
//! * [`minimize`]: analytic gradients, a deterministic backtracking descent
//!   engine, a brute-force grid oracle and the a-priori bond estimate.
//! * [`gamma`]: scaling sweeps of the chirality-transition energy, the
//!   discrete Modica-Mortola functional, the continuum functional of the
//!   diffuse regime and the cell-problem estimator of the bulk density.
//! * [`io`]: CSV/JSON writers shared by the command-line front end.

// `!(x <= tol)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chirality;
pub mod error;
pub mod gamma;
pub mod io;
pub mod minimize;
pub mod spin;
mod sum;

pub use error::{Error, Result};

/// Schema tag written into every emitted JSON document.
pub const SCHEMA_TAG: &str = "helichain/v1";
