//! Heavy-tailed stochastic optimization laboratory.
//!
//! The crate is split along the lines of the experiments it supports:
//!
//! - [`problems`]: deterministic objectives with analytic gradients and
//!   declared smoothness constants, including the zero-chain hard instance.
//! - [`noise`]: seeded stochastic gradient oracles with certified
//!   `p`-th moment bounds.
//! - [`optim`]: normalized / sign momentum SGD, clipped SGD, plain SGD and
//!   the constant parameter schedules.
//! - [`verify`]: direct numerical checks of the supporting inequalities
//!   (online-learning bound, error decomposition, martingale bound, descent).
//! - [`harness`]: seed-replicated experiment runner, log-log rate fitting and
//!   config / result files.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod linalg;
pub mod noise;
pub mod optim;
pub mod problems;
pub mod verify;

pub use error::{Error, Result};
pub use noise::{NoiseKind, OracleMeta, StochasticOracle, Stream};
pub use optim::{Method, OptimizerState, OptimizerTrace, Schedule, ScheduleKind};
pub use problems::{HardInstanceParams, Problem};
