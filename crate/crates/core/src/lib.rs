//! Schrödinger operators on radial trees with generalized point-interaction
//! vertex couplings: reduction to halfline problems, m-functions, truncated
//! spectra and indicators for absolutely continuous spectrum.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod builtin;
pub mod cli;
pub mod coupling;
pub mod error;
pub mod linalg;
pub mod reduction;
pub mod spectral;
pub mod tree;

pub use error::{Error, Result};
