//! Persistence of populations with nonlocal dispersal in a shifting niche.
//!
//! The crate computes generalized principal eigenvalues of
//! `ε u'' + c u' + (J ⋆ u − u) + a(x) u` on bounded domains, builds the
//! positive steady state of the moving-frame equation, integrates the
//! time-dependent problem and brackets the critical shift speeds.

// `!(x > 0.0)` is used on purpose so that NaN is rejected with the bad value.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod banded;
pub mod cli;
pub mod config;
pub mod critical_speed;
pub mod environment;
pub mod evolution;
pub mod kernel;
pub mod operator;
pub mod spectral;
pub mod steady_state;
