//! Euler–Maruyama simulation of SDEs with bounded Hölder drift and
//! multiplicative noise, plus the numerical machinery used to measure the
//! weak convergence rate `(1+α)/2` and its supporting estimates.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coefficients;
pub mod engine;
pub mod error;
pub mod estimators;
pub mod gaussian;
pub mod holder;
pub mod parallel;
pub mod pde;
pub mod problem;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use problem::SdeProblem;
