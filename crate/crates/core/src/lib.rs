//! Sparse recovery by generalized entropy minimization.

// `!(a <= b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod operators;
pub mod regularizers;
pub mod rng;
pub mod selftest;
pub mod shrinkage;
pub mod solver;
pub mod vector;

pub use error::{Error, Result};
pub use operators::{LinearOperator, OperatorManifest};
pub use regularizers::{Penalty, RegularizerSpec};
pub use rng::RandomSeed;
pub use solver::{solve, solve_from, solve_l1, SolveOutput, SolverConfig, SolverTrace};
