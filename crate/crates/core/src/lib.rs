//! Exact piecewise-deterministic Monte Carlo unravellings of open quantum
//! dynamics, with a fast path and closed-form solutions for the spin star
//! model (a central spin coupled to `N` bath spins).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod engine;
pub mod ensemble;
pub mod error;
pub mod model_file;
pub mod numerics;
pub mod oracle;
pub mod pdp1;
pub mod pdp2;
pub mod selftest;
pub mod stats;

pub use error::{Error, Result};
pub use numerics::{CMatrix, CVector, Complex, RngStream};
