//! Simulation and verification engine for anticipation dynamics: agents
//! that react to anticipated positions `x + tau v` through a radial
//! interaction potential.
//!
//! The crate covers closed-form potential families and communication
//! kernels, the discrete (AT), (PhiU) and Cucker-Smale systems, fixed-step
//! integration, energy and enstrophy diagnostics with decay-exponent fits,
//! the local-vs-global means inequality, a Lagrangian particle solver for
//! the 1D hydrodynamic limit, and a batch experiment runner.

// negated comparisons are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod expcli;
pub mod hydro1d;
pub mod integrator;
pub mod kernels;
pub mod potentials;

pub use error::{Error, Result};
