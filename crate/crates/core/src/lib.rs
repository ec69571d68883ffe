//! Globalized lazy adaptive semismooth Newton (GLAd-SSN) for composite
//! minimization `F = f + ψ`, with benchmark problems, an Armijo
//! gradient-descent baseline, and trace diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod oracle;
pub mod problems;
pub mod ssn;
pub mod trace;

pub use error::{Error, Result};
