//! Marked Hawkes risk processes in continuous time and their Euler-type
//! discretization, thinned from one shared Poisson measure, together with
//! exact pathwise distances (fractional Sobolev, Skorokhod) and the
//! stability and regularity constants that bound them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod metrics;
pub mod quadrature;
pub mod randomness;
pub mod simulate;

pub use error::{Error, Result};
