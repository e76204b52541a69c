//! Exact and Monte Carlo analysis of the Pollard rho discrete-logarithm walk.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod fourier;
pub mod mixing;
pub mod modmath;
pub mod rng;
pub mod solver;
pub mod spectral;
pub mod sst;
pub mod walk;
