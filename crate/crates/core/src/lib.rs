//! Simulation and bound evaluation for the Gaussian many-access channel
//! with random user activity.
//!
//! The channel output is `Y = sum_i X_i(W_i) + Z` with `Z ~ N(0, N0/2)` per
//! coordinate; inactive users send the all-zero word. Two schemes are
//! provided: signatures followed by joint decoding of the detected users,
//! and orthogonal slots carrying a pilot and a PPM word. All quantities are
//! in nats unless a name says otherwise.

// Negated comparisons below are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod channel;
pub mod codebook;
pub mod decoding;
pub mod detection;
pub mod error;
pub mod harness;
pub mod model;
pub mod partition;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
