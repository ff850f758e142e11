//! Sparse canonical correlation analysis.
//!
//! The first canonical pair is found by alternating between two convex
//! subproblems,
//!
//! ```text
//! minimize  -u'X'Yv + tau_u |u|_1 + tau_v |v|_1
//! s.t.      |Xu|_2 <= 1,  |Yv|_2 <= 1,
//! ```
//!
//! each of which is solved with a linearized ADMM iteration built from two
//! closed-form proximal maps (a soft threshold and a ball projection).
//! Higher pairs are obtained by deflation through an augmented operator.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line driver and the experiment harness live in the `scca` crate.

#![no_std]
#![allow(clippy::many_single_char_names)]

extern crate alloc;

pub mod admm;
pub mod baselines;
pub mod data;
mod error;
pub mod linalg;
pub mod linop;
pub mod metrics;
pub mod prox;
pub mod simulation;
pub mod solver;

pub use admm::{solve_subproblem, AdmmState, SolverConfig};
pub use data::{center_scale, Dataset, ScaleMode};
pub use error::{Error, Result};
pub use linop::LinearOperator;
pub use solver::{solve_first_pair, solve_rth_pair, CcaSolution, DeflationContext};

/// Dense column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dense column-major matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
