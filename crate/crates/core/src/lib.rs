// `!(x > 0.0)` guards also reject NaN; index loops mirror the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod adjoint;
pub mod analytic;
pub mod born;
pub mod config;
pub mod error;
pub mod fft;
pub mod field;
pub mod forward;
pub mod fresnel;
pub mod greens;
pub mod grid;
pub mod io;
pub mod measurement;
pub mod metrics;
pub mod par;
pub mod phantom;
pub mod recon;
pub mod simulate;
pub mod special;
pub mod tv;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
