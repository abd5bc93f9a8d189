//! Tempered fractional Vasicek model.
//!
//! The crate covers the whole pipeline around the model
//! `dY = (a + bY) dt + sigma dB`, where `B` is a tempered fractional Brownian
//! motion (TFBM) and `b > 0`:
//!
//! * [`specfun`]: log-gamma, the modified Bessel function `K_nu` and the Gauss
//!   hypergeometric function on `(-1, 1)`;
//! * [`tfbm`]: the closed-form covariance kernel and exact Cholesky sampling;
//! * [`vasicek`]: trajectories, least-squares drift estimators and the
//!   auxiliary functionals `Z_T`, `U_T`, `V_T`;
//! * [`asymptotics`]: the limit constants `alpha^2`, `beta^2`, the limiting
//!   covariance matrix and finite-horizon second moments;
//! * [`montecarlo`]: replicated experiments and Kolmogorov-Smirnov checks of
//!   the limit laws.

// Coefficient tables and reference values keep every published digit.
#![allow(clippy::excessive_precision)]

pub mod asymptotics;
pub mod error;
pub mod export;
pub mod linalg;
pub mod montecarlo;
pub mod quadrature;
pub mod rng;
pub mod specfun;
pub mod tfbm;
pub mod vasicek;

pub use error::{Error, Result};
