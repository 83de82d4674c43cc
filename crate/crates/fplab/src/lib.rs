//! fplab: a desk-scale numerical laboratory for the fractional p-Laplacian.
//!
//! The crate evaluates the nonlocal operator by singular-integral quadrature,
//! verifies barrier-function boundary estimates, solves Dirichlet problems by
//! energy minimization, continues semipositone solution branches from the
//! Lane-Emden state, runs a numerical mountain pass for the critical-exponent
//! multiparameter problem, and certifies computed solutions with an explicit
//! Moser-iteration L-infinity bound.
//!
//! Start from the runnable examples (one per capability) or the `cli` module
//! for batch experiment runs.

// Validation tests are written as !(x > 0) so NaN inputs fail them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod quad;

pub mod geometry;
pub mod operator;

pub mod barrier;
pub mod dirichlet;
pub mod semipositone;

pub mod critical;
pub mod moser;

pub mod cli;

pub use error::{Error, Result};
