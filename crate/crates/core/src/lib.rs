//! Uncertainty quantification for kinetic models of collective behavior.

// Negated comparisons are used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dsmc;
pub mod error;
pub mod harness;
pub mod meanfield;
pub mod models;
pub mod qoi;
pub mod quadrature;
pub mod uq;

pub use error::{Error, Result};
