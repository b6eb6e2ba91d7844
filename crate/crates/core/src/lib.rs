//! Adaptive time allocation between radar tracking and communication.
//!
//! Targets move under a constant-velocity model, a radar tracks each one
//! with an extended Kalman filter whose measurement quality depends on the
//! dwell time spent on it, and whatever is left of the revisit interval is
//! used to transmit data toward the estimated target directions. A shared
//! deep Q-network picks per-target dwell fractions while a Lagrange
//! multiplier enforces the time budget.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cdrl;
pub mod comms;
pub mod config;
pub mod ekf;
pub mod env;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod motion;
pub mod qnet;
pub mod rng;
pub mod scenario;
pub mod sensing;

pub use error::{IsacError, Result};
