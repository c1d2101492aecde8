//! Joint transmit power, bandwidth, CPU frequency and frame-resolution
//! allocation for federated learning clients sharing an FDMA uplink.

// Negated comparisons are used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod model;
pub mod numerics;
pub mod sp1;
pub mod sp2;
pub mod validate;
pub mod bcd;
pub mod config;
pub mod harness;

pub use error::{Error, Result, Violation};
pub use model::*;
