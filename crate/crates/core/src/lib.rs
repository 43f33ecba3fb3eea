//! Interpolatory model reduction for parametric bilinear systems.

// NaN must fail range checks, so `!(x > 0.0)` is intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod benchmarks;
pub mod deim;
pub mod error;
pub mod irka;
pub mod kernels;
pub mod mtx;
pub mod projection;
mod serde_util;
pub mod simulate;
pub mod sweep;
pub mod system;
pub mod transfer;
pub mod verify;

pub use error::{Error, Result};
pub use faer::c64;
