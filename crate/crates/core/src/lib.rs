//! Phase structure and parameter-estimation limits of the single spherical
//! quantum spin, in and out of equilibrium.

// `!(a < b)` is used on purpose so that NaN fails every guard.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fock;
pub mod metrology;
pub mod model;
pub mod numerics;
pub mod validation;

pub use error::{Error, Result};
