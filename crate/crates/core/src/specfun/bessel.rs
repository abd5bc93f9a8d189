//! Modified Bessel function of the second kind.
//!
//! The order is split as `nu = mu + n` with `|mu| <= 1/2`. `K_mu` and
//! `K_{mu+1}` come from Temme's series for `x <= 2` and from Steed's
//! continued fraction (CF2) above that; upward recurrence in the order is
//! stable for `K`. Temme's series is the limit-safe form of the
//! `(I_{-nu} - I_nu) / sin(pi nu)` representation, so integer orders need
//! no separate branch and the function is smooth in `nu`.

use std::f64::consts::PI;

use super::gamma::temme_gammas;
use crate::error::{ensure_finite, Error, Result};

/// Largest order accepted by [`bessel_k`].
pub const MAX_ORDER: f64 = 5.0;

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 100_000;
const SERIES_LIMIT: f64 = 2.0;

/// `K_nu(x)` for `0 <= nu <= 5`, `x > 0`.
pub fn bessel_k(nu: f64, x: f64) -> Result<f64> {
    Ok(bessel_k_scaled(nu, x)? * (-x).exp())
}

/// `exp(x) K_nu(x)`; does not underflow for large `x`.
pub fn bessel_k_scaled(nu: f64, x: f64) -> Result<f64> {
    validate(nu, x)?;
    let n = (nu + 0.5).floor();
    let mu = nu - n;
    let (mut k_mu, mut k_mu1) = if x <= SERIES_LIMIT {
        let (k0, k1) = temme_series(mu, x)?;
        (k0 * x.exp(), k1 * x.exp())
    } else {
        steed_cf2_scaled(mu, x)?
    };
    let two_over_x = 2.0 / x;
    for i in 1..=(n as usize) {
        let next = (mu + i as f64) * two_over_x * k_mu1 + k_mu;
        k_mu = k_mu1;
        k_mu1 = next;
    }
    Ok(k_mu)
}

fn validate(nu: f64, x: f64) -> Result<()> {
    ensure_finite("nu", nu)?;
    ensure_finite("x", x)?;
    if x <= 0.0 {
        return Err(Error::Domain {
            name: "x",
            value: x,
            reason: "K_nu requires x > 0",
        });
    }
    if !(0.0..=MAX_ORDER).contains(&nu) {
        return Err(Error::Domain {
            name: "nu",
            value: nu,
            reason: "K_nu is supported for 0 <= nu <= 5",
        });
    }
    Ok(())
}

/// Temme's series for `K_mu(x)` and `K_{mu+1}(x)`, `|mu| <= 1/2`, small `x`.
fn temme_series(mu: f64, x: f64) -> Result<(f64, f64)> {
    let x2 = 0.5 * x;
    let pimu = PI * mu;
    let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
    let d = -x2.ln();
    let e = mu * d;
    let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
    let (gam1, gam2, gampl, gammi) = temme_gammas(mu);

    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    let mut p = 0.5 * ee / gampl;
    let mut q = 0.5 / (ee * gammi);
    let mut c = 1.0;
    let d2 = x2 * x2;
    let mut sum1 = p;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu * mu);
        c *= d2 / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        let del1 = c * (p - fi * ff);
        sum1 += del1;
        if del.abs() < sum.abs() * EPS {
            return Ok((sum, sum1 * 2.0 / x));
        }
    }
    Err(Error::SeriesNotConverged {
        what: "Temme series for K_nu",
        terms: MAX_ITER,
    })
}

/// Steed's CF2 for `exp(x) K_mu(x)` and `exp(x) K_{mu+1}(x)`, `x > 2`.
fn steed_cf2_scaled(mu: f64, x: f64) -> Result<(f64, f64)> {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu * mu;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            let h = a1 * h;
            let k_mu = (PI / (2.0 * x)).sqrt() / s;
            let k_mu1 = k_mu * (mu + x + 0.5 - h) / x;
            return Ok((k_mu, k_mu1));
        }
    }
    Err(Error::SeriesNotConverged {
        what: "Steed continued fraction for K_nu",
        terms: MAX_ITER,
    })
}
