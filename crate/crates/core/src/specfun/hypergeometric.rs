use crate::error::{ensure_finite, Error, Result};

/// Largest `|x|` for which [`hyp2f1`] sums the series itself.
pub const SERIES_CUTOFF: f64 = 0.9;

const MAX_TERMS: usize = 50_000;

/// Gauss hypergeometric function `2F1(a, b; c; x)` for real arguments with
/// `c > b > 0` and `|x| <= 0.9`.
///
/// Non-negative `x` is summed directly; negative `x` goes through the Pfaff
/// transformation `2F1(a,b;c;x) = (1-x)^{-b} 2F1(c-a, b; c; x/(x-1))`, which maps
/// `(-0.9, 0)` into `(0, 0.48)`. Arguments with `0.9 < |x| < 1` return
/// [`Error::FallbackRequired`].
pub fn hyp2f1(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    ensure_finite("a", a)?;
    ensure_finite("b", b)?;
    ensure_finite("c", c)?;
    ensure_finite("x", x)?;
    if !(b > 0.0 && c > b) {
        return Err(Error::Domain {
            name: "c",
            value: c,
            reason: "2F1 requires c > b > 0",
        });
    }
    if x.abs() >= 1.0 {
        return Err(Error::Domain {
            name: "x",
            value: x,
            reason: "2F1 requires |x| < 1",
        });
    }
    if x.abs() > SERIES_CUTOFF {
        return Err(Error::FallbackRequired {
            x,
            cutoff: SERIES_CUTOFF,
        });
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x > 0.0 {
        gauss_series(a, b, c, x)
    } else {
        let z = x / (x - 1.0);
        Ok((1.0 - x).powf(-b) * gauss_series(c - a, b, c, z)?)
    }
}

fn gauss_series(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..MAX_TERMS {
        let n = n as f64;
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z;
        sum += term;
        if term == 0.0 || (term.abs() <= 1e-17 * sum.abs() && n > 2.0) {
            return Ok(sum);
        }
    }
    Err(Error::SeriesNotConverged {
        what: "hypergeometric series",
        terms: MAX_TERMS,
    })
}
