//! Special functions on real arguments.
//!
//! All functions are pure and safe to call concurrently.

mod bessel;
mod gamma;
mod hypergeometric;

pub use bessel::{bessel_k, bessel_k_scaled, MAX_ORDER};
pub use gamma::{gamma, log_gamma, recip_gamma_1p};
pub use hypergeometric::{hyp2f1, SERIES_CUTOFF};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
