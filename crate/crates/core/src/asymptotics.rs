//! Limit constants of the estimators and samplers for their limit laws.
//!
//! With `v(t) = Var B(t)`:
//!
//! * `alpha^2 = lim v(t) = 2 Gamma(2H) / (2 lambda)^{2H}`;
//! * `beta^2 = (b/2) int_0^inf e^{-bu} v(u) du`;
//! * `(Z, U, V)` converge jointly to `N(0, Sigma)` with
//!   `Sigma = [[beta^2/b^2, beta^2/b^2, 0], [beta^2/b^2, (alpha^2 - beta^2)/b^2, 0], [0, 0, beta^2]]`.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};
use crate::rng::stream_rng;
use crate::specfun::{hyp2f1, log_gamma, SERIES_CUTOFF};
use crate::tfbm::{variance, TfbmParams};
use crate::vasicek::VasicekParams;

/// Target size of the neglected exponential tail in [`beta_squared_quadrature`].
pub const TAIL_BOUND: f64 = 1e-13;
/// Largest `bT` accepted by [`finite_t_second_moments`].
pub const MAX_BT: f64 = 50.0;

fn check_rate(b: f64) -> Result<()> {
    if b.is_finite() && b > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "b",
            value: b,
            reason: "b must be positive",
        })
    }
}

fn var(p: &TfbmParams, u: f64) -> f64 {
    variance(p, u).expect("quadrature nodes are non-negative")
}

pub fn alpha_squared(p: &TfbmParams) -> f64 {
    let h = p.hurst();
    let log = std::f64::consts::LN_2 + log_gamma(2.0 * h).expect("2H > 0") - 2.0 * h * (2.0 * p.lambda()).ln();
    log.exp()
}

/// `beta^2` by adaptive quadrature of its defining Laplace integral.
///
/// The half-line is cut at `u_max` where `(alpha^2 / 2) e^{-b u_max} <= 1e-13`
/// and split at `u = 1`, where the `u^{2H}` behaviour of `v` gives way to the
/// exponential decay.
pub fn beta_squared_quadrature(p: &TfbmParams, b: f64) -> Result<f64> {
    check_rate(b)?;
    let alpha_sq = alpha_squared(p);
    let u_max = ((0.5 * alpha_sq / TAIL_BOUND).ln() / b).max(1.0);
    let f = |u: f64| (-b * u).exp() * var(p, u);
    let tol = Tolerance::absolute(1e-11 / b).with_relative(1e-13);
    let head = integrate(f, 0.0, 1.0, tol)?;
    let tail = integrate(f, 1.0, u_max, tol)?;
    Ok(0.5 * b * (head.value + tail.value))
}

fn hyp_args(p: &TfbmParams, b: f64) -> (f64, f64, f64, f64) {
    let h = p.hurst();
    let lambda = p.lambda();
    (2.0 * h + 1.0, h + 0.5, h + 1.5, (b - lambda) / (b + lambda))
}

/// `alpha^2/2 - 2b Gamma(2H+1) / ((b+lambda)^{2H+1} (2H+1)) * F`, with
/// `F = 2F1(2H+1, H+1/2; H+3/2; (b-lambda)/(b+lambda))`.
fn beta_from_hyp(p: &TfbmParams, b: f64, f: f64) -> f64 {
    let h = p.hurst();
    let log_coef = (2.0 * b).ln() + log_gamma(2.0 * h + 1.0).expect("2H + 1 > 0")
        - (2.0 * h + 1.0) * (b + p.lambda()).ln()
        - (2.0 * h + 1.0).ln();
    0.5 * alpha_squared(p) - log_coef.exp() * f
}

/// `beta^2` through the closed form in terms of the Gauss hypergeometric function.
///
/// Returns [`Error::FallbackRequired`] when `|(b - lambda)/(b + lambda)| > 0.9`.
pub fn beta_squared_hypergeometric(p: &TfbmParams, b: f64) -> Result<f64> {
    check_rate(b)?;
    let (ha, hb, hc, x) = hyp_args(p, b);
    let f = hyp2f1(ha, hb, hc, x)?;
    Ok(beta_from_hyp(p, b, f))
}

/// Same closed form, with the hypergeometric factor taken from its Euler
/// integral instead of the series. Valid for every `b > 0`.
///
/// Since `c - b = 1` here, `s = t^{H+1/2}` turns the Euler integral into
/// `int_0^1 (1 - x s^{1/(H+1/2)})^{-(2H+1)} ds`, which has no endpoint singularity.
pub fn beta_squared_euler(p: &TfbmParams, b: f64) -> Result<f64> {
    check_rate(b)?;
    let (ha, hb, _, x) = hyp_args(p, b);
    let power = 1.0 / hb;
    let integrand = |s: f64| (1.0 - x * s.powf(power)).powf(-ha);
    let f = integrate(integrand, 0.0, 1.0, Tolerance::absolute(1e-14).with_relative(1e-13))?;
    Ok(beta_from_hyp(p, b, f.value))
}

/// Whether [`beta_squared_hypergeometric`] accepts `(p, b)`.
pub fn hypergeometric_route_available(p: &TfbmParams, b: f64) -> bool {
    hyp_args(p, b).3.abs() <= SERIES_CUTOFF
}

/// Hypergeometric-form `beta^2`: series where it is accurate, Euler integral otherwise.
pub fn beta_squared_closed_form(p: &TfbmParams, b: f64) -> Result<f64> {
    match beta_squared_hypergeometric(p, b) {
        Err(Error::FallbackRequired { .. }) => beta_squared_euler(p, b),
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticConstants {
    pub alpha_sq: f64,
    pub beta_sq: f64,
    pub sigma_matrix: [[f64; 3]; 3],
}

impl AsymptoticConstants {
    /// Assembles the limit covariance; fails unless `0 < beta^2 < alpha^2` and
    /// `alpha^2 >= 2 beta^2` (up to `1e-12`).
    pub fn from_parts(alpha_sq: f64, beta_sq: f64, b: f64) -> Result<Self> {
        check_rate(b)?;
        if !(beta_sq > 0.0 && beta_sq < alpha_sq) {
            return Err(Error::Invariant(format!(
                "expected 0 < beta^2 < alpha^2, got beta^2 = {beta_sq}, alpha^2 = {alpha_sq}"
            )));
        }
        let b2 = b * b;
        let minor = beta_sq * (alpha_sq - 2.0 * beta_sq) / (b2 * b2);
        if minor < -1e-12 {
            return Err(Error::Invariant(format!(
                "limit covariance is not positive semi-definite: leading minor {minor:e}"
            )));
        }
        let c = beta_sq / b2;
        Ok(Self {
            alpha_sq,
            beta_sq,
            sigma_matrix: [[c, c, 0.0], [c, (alpha_sq - beta_sq) / b2, 0.0], [0.0, 0.0, beta_sq]],
        })
    }
}

/// `alpha^2`, `beta^2` (quadrature route) and the limit covariance of `(Z, U, V)`.
pub fn sigma_matrix(p: &TfbmParams, b: f64) -> Result<AsymptoticConstants> {
    AsymptoticConstants::from_parts(alpha_squared(p), beta_squared_quadrature(p, b)?, b)
}

/// Parameters of the limit laws of the scaled estimation errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitLawParams {
    /// Variance of the normal limit of `T (a_hat - a)`: `sigma^2 alpha^2`.
    pub a_limit_var: f64,
    /// `Var eta_1 = 4 b^2 sigma^2 beta^2`.
    pub eta1_var: f64,
    /// `E eta_2 = y0 + a/b`.
    pub eta2_mean: f64,
    /// `Var eta_2 = sigma^2 beta^2`.
    pub eta2_var: f64,
    pub b: f64,
    pub sigma: f64,
    pub alpha_sq: f64,
    pub beta_sq: f64,
}

impl LimitLawParams {
    pub fn new(constants: &AsymptoticConstants, vp: &VasicekParams) -> Self {
        let (b, sigma) = (vp.b(), vp.sigma());
        let s2 = sigma * sigma;
        Self {
            a_limit_var: s2 * constants.alpha_sq,
            eta1_var: 4.0 * b * b * s2 * constants.beta_sq,
            eta2_mean: vp.shifted_start(),
            eta2_var: s2 * constants.beta_sq,
            b,
            sigma,
            alpha_sq: constants.alpha_sq,
            beta_sq: constants.beta_sq,
        }
    }

    /// Lower Cholesky factor of the limit covariance, in closed form.
    fn sigma_cholesky(&self) -> [[f64; 3]; 3] {
        let beta = self.beta_sq.sqrt();
        let b = self.b;
        let l22 = (self.alpha_sq - 2.0 * self.beta_sq).max(0.0).sqrt() / b;
        [[beta / b, 0.0, 0.0], [beta / b, l22, 0.0], [0.0, 0.0, beta]]
    }
}

/// Draws from the limit laws of `T (a_hat - a)` and `e^{bT} (b_hat - b)`.
///
/// Entry `i` of both vectors comes from the same `xi ~ N(0, Sigma)`, so the
/// pairs follow the joint limit law.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitDraws {
    pub xi: Vec<[f64; 3]>,
    /// `b sigma xi_2 - sigma xi_3`.
    pub a_limit: Vec<f64>,
    /// `2 b sigma xi_3 / (y0 + a/b + b sigma xi_1)`.
    pub b_limit: Vec<f64>,
}

/// Draw `i` uses stream `(seed, i)`.
pub fn sample_limit_laws(lp: &LimitLawParams, n: usize, seed: u64) -> LimitDraws {
    let l = lp.sigma_cholesky();
    let xi: Vec<[f64; 3]> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let z: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
            std::array::from_fn(|r| (0..=r).map(|c| l[r][c] * z[c]).sum())
        })
        .collect();
    let (b, sigma) = (lp.b, lp.sigma);
    let a_limit = xi.iter().map(|x| b * sigma * x[1] - sigma * x[2]).collect();
    let b_limit = xi
        .iter()
        .map(|x| 2.0 * b * sigma * x[2] / (lp.eta2_mean + b * sigma * x[0]))
        .collect();
    LimitDraws { xi, a_limit, b_limit }
}

/// Independent draws of `eta_1 / eta_2`.
pub fn sample_eta_ratio(lp: &LimitLawParams, n: usize, seed: u64) -> Vec<f64> {
    let (s1, s2) = (lp.eta1_var.sqrt(), lp.eta2_var.sqrt());
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            (s1 * z1) / (lp.eta2_mean + s2 * z2)
        })
        .collect()
}

/// Second moments of `(Z_T, U_T, V_T)` and their covariances with `B(T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteMoments {
    pub horizon: f64,
    pub ez2: f64,
    pub eu2: f64,
    pub ev2: f64,
    pub ezu: f64,
    pub ezv: f64,
    pub euv: f64,
    pub ezb: f64,
    pub eub: f64,
}

impl FiniteMoments {
    /// Covariance matrix of `(Z_T, U_T, V_T)`.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        [
            [self.ez2, self.ezu, self.ezv],
            [self.ezu, self.eu2, self.euv],
            [self.ezv, self.euv, self.ev2],
        ]
    }
}

/// Exact second moments at a finite horizon `T`.
///
/// Every double integral of the covariance kernel collapses to one of
/// `A = int e^{-bu} v`, `B = int e^{-b(T-u)} v`, `C = int (T-u) e^{-b(T-u)} v`,
/// `D = int (T-u) e^{-b(T+u)} v` over `[0, T]`, so only four one-dimensional
/// quadratures are needed.
pub fn finite_t_second_moments(p: &TfbmParams, b: f64, horizon: f64) -> Result<FiniteMoments> {
    check_rate(b)?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::Domain {
            name: "T",
            value: horizon,
            reason: "horizon must be non-negative",
        });
    }
    if b * horizon > MAX_BT {
        return Err(Error::Domain {
            name: "bT",
            value: b * horizon,
            reason: "bT must not exceed 50",
        });
    }
    let t = horizon;
    let tol = Tolerance::absolute(1e-10).with_relative(1e-13);
    let quad = |f: &dyn Fn(f64) -> f64| -> Result<f64> {
        let cut = t.min(1.0);
        Ok(integrate(f, 0.0, cut, tol)?.value + integrate(f, cut, t, tol)?.value)
    };
    let a = quad(&|u| (-b * u).exp() * var(p, u))?;
    let bp = quad(&|u| (-b * (t - u)).exp() * var(p, u))?;
    let c3 = quad(&|u| (t - u) * (-b * (t - u)).exp() * var(p, u))?;
    let c4 = quad(&|u| (t - u) * (-b * (t + u)).exp() * var(p, u))?;

    let decay = (-b * t).exp();
    let w = (1.0 - decay) / b;
    let vt = var(p, t);
    let lag = (a - decay * bp) / (2.0 * b);

    let ez2 = w * a - lag;
    let eu2 = w * bp - lag;
    let eub = 0.5 * vt * w + 0.5 * (bp - a);
    let ezb = 0.5 * vt * w + 0.5 * (a - bp);
    let ev2 = b * b * eu2 + decay * vt - b * bp + b * a;
    let ezu = 0.5 * w * (a + bp) - 0.5 * (c3 + c4);
    Ok(FiniteMoments {
        horizon,
        ez2,
        eu2,
        ev2,
        ezu,
        ezv: ezb - b * ezu,
        euv: eub - b * eu2,
        ezb,
        eub,
    })
}
