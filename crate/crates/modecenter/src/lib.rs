//! Kernel mode estimation of the center of symmetry.
//!
//! The estimator maximizes a kernel density estimate built from a
//! one-parameter family of compactly supported bump kernels. The shape
//! parameter and the bandwidth are tuned jointly by minimizing a plug-in
//! asymptotic variance, and the estimate itself is computed by iterative
//! reweighting (mean shift). The crate also ships the classic robust
//! location estimators used as benchmarks and a reproducible Monte Carlo
//! harness for comparing them.

pub mod error;
pub mod estimators;
pub mod kernels;
pub mod newcomb;
pub mod pilot;
pub mod quad;
pub mod seeding;
pub mod sim;
pub mod stats;
pub mod testbeds;
pub mod tuner;
pub mod variance;

pub use error::{Error, Result};
