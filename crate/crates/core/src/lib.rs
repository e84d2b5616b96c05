//! Pseudo-spectral time splitting for semiclassical nonlinear Schrödinger
//! equations, in wavefunction and in phase/amplitude variables.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod grid;
pub mod harness;
pub mod limits;
pub mod nonlinearity;
pub mod wavefunction;
pub mod wkb;

pub use error::{Error, Result};
pub use exec::Execution;
