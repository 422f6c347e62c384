//! Kernel two-sample tests whose kernel combination is learned and tested on
//! the same data.
//!
//! The linear-time MMD estimate is computed for a menu of kernels
//! ([`kernels`]), a non-negative combination maximizing the estimated
//! signal-to-noise ratio is found ([`optimizer`]), and the resulting statistic
//! is compared against its conditional null law given the selection event
//! ([`seltest`]). [`experiments`] holds dataset generators and a
//! Monte-Carlo harness for calibration and power studies.

pub mod error;
pub mod experiments;
pub mod kernels;
pub mod numerics;
pub mod optimizer;
pub mod seltest;

pub use error::{Error, Result};
pub use kernels::{BaseStatistics, KernelSpec};
pub use numerics::SymMatrix;
pub use optimizer::{solve_ost, OptResult};
pub use seltest::{Method, SelTestConfig, TestOutcome};
