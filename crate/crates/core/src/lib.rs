//! Dephasing of a qubit-driven two-dimensional matter-wave interferometer
//! under correlated inertial acceleration noise.
// Negated comparisons are used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dephasing;
pub mod error;
pub mod grid;
pub mod interferometer;
pub mod langevin;
pub mod noise_model;
pub mod phase_mc;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
