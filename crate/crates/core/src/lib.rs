//! Multivalued stochastic differential equations driven by maximal monotone
//! operators.
//!
//! The crate covers resolvent/Yosida calculus ([`monotone_ops`]), time grids,
//! Brownian paths and Cameron–Martin controls ([`paths`]), the resolvent
//! Euler scheme with its Yosida-penalised counterpart ([`solver`]),
//! Freidlin–Wentzell rate functions ([`rate`]), small-noise Monte Carlo
//! ([`ldp`]), functional LIL experiments ([`flil`]) and the JSON-driven
//! experiment runner ([`cli`]).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod flil;
pub mod ldp;
pub mod linalg;
pub mod monotone_ops;
pub mod optim;
pub mod paths;
pub mod rate;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
