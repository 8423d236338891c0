//! Proximal stochastic gradient methods for composite finite sums
//! `min_x (1/n) Σ f_i(x) + R(x)`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::too_many_arguments)]

pub mod data;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod problem;
pub mod rng;
pub mod runner;
pub mod sampling;
pub mod theory;
pub mod verify;

pub use error::{Error, Result};
