//! Lattice emulation of an analog quantum-chemistry simulator.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eigen;
pub mod error;
pub mod fft3;
pub mod fit;
pub mod lattice;
pub mod linalg;
pub mod mediator;
pub mod planner;
pub mod single_particle;
pub mod snapshot;
pub mod two_electron;

pub use error::{Error, Result};
