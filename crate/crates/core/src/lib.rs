// NaN must fail every tolerance check, so `!(x <= tol)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod matcore;
pub mod measures;
pub mod quantum;
pub mod scenarios;
pub mod symmetry;
pub mod universality;

pub use error::{Error, Result};
