//! Tempered fractional Vasicek trajectories and least-squares drift estimation.
//!
//! The estimator integrals `int Y` and `int Y^2` use composite Simpson. Their
//! integrands grow like `e^{2bT}`, and the `O(dt^2)` bias of the trapezoid
//! rule would be amplified by the same factor in `T (a_hat - a)`. The noise
//! functionals use the trapezoid rule, updated incrementally.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::tfbm::SampleGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVasicekParams", into = "RawVasicekParams")]
pub struct VasicekParams {
    a: f64,
    b: f64,
    sigma: f64,
    y0: f64,
}

#[derive(Serialize, Deserialize)]
struct RawVasicekParams {
    a: f64,
    b: f64,
    sigma: f64,
    y0: f64,
}

impl TryFrom<RawVasicekParams> for VasicekParams {
    type Error = Error;
    fn try_from(r: RawVasicekParams) -> Result<Self> {
        VasicekParams::new(r.a, r.b, r.sigma, r.y0)
    }
}

impl From<VasicekParams> for RawVasicekParams {
    fn from(p: VasicekParams) -> Self {
        RawVasicekParams {
            a: p.a,
            b: p.b,
            sigma: p.sigma,
            y0: p.y0,
        }
    }
}

impl VasicekParams {
    pub fn new(a: f64, b: f64, sigma: f64, y0: f64) -> Result<Self> {
        ensure_finite("a", a)?;
        ensure_finite("b", b)?;
        ensure_finite("sigma", sigma)?;
        ensure_finite("y0", y0)?;
        if b <= 0.0 {
            return Err(Error::Domain {
                name: "b",
                value: b,
                reason: "b must be positive",
            });
        }
        if sigma <= 0.0 {
            return Err(Error::Domain {
                name: "sigma",
                value: sigma,
                reason: "sigma must be positive",
            });
        }
        Ok(Self { a, b, sigma, y0 })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn y0(&self) -> f64 {
        self.y0
    }

    /// `y0 + a/b`, the mean of the limiting denominator.
    pub fn shifted_start(&self) -> f64 {
        self.y0 + self.a / self.b
    }
}

fn check_path(path: &[f64], grid: &SampleGrid) -> Result<()> {
    if path.len() != grid.len() {
        return Err(Error::GridMismatch {
            expected: grid.len(),
            got: path.len(),
        });
    }
    Ok(())
}

fn check_noise(path: &[f64], grid: &SampleGrid) -> Result<()> {
    check_path(path, grid)?;
    if path[0] != 0.0 {
        return Err(Error::PathOrigin(path[0]));
    }
    Ok(())
}

/// Trapezoid rule for samples on a uniform grid with spacing `dt`.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => dt * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

/// Composite Simpson on a uniform grid; an odd number of intervals ends with
/// the 3/8 rule on the last three. Falls back to the trapezoid rule for one interval.
pub fn simpson(values: &[f64], dt: f64) -> f64 {
    let n = values.len().saturating_sub(1);
    if n < 2 {
        return trapezoid(values, dt);
    }
    let even = if n.is_multiple_of(2) { n } else { n - 3 };
    let mut total = 0.0;
    if even > 0 {
        let mut sum = values[0] + values[even];
        for (k, v) in values[1..even].iter().enumerate() {
            sum += if k % 2 == 0 { 4.0 } else { 2.0 } * v;
        }
        total = sum * dt / 3.0;
    }
    if even < n {
        let t = &values[even..];
        total += 3.0 * dt / 8.0 * (t[0] + 3.0 * t[1] + 3.0 * t[2] + t[3]);
    }
    total
}

/// `Y(t_k) = (y0 + a/b) e^{b t_k} - a/b + sigma (B(t_k) + b e^{b t_k} J_k)`
/// with `J_k` the running trapezoid of `int_0^{t_k} e^{-bs} B(s) ds`.
pub fn simulate_vasicek(vp: &VasicekParams, grid: &SampleGrid, noise: &[f64]) -> Result<Vec<f64>> {
    check_noise(noise, grid)?;
    let (a, b, sigma) = (vp.a, vp.b, vp.sigma);
    let dt = grid.step();
    let shift = a / b;
    let start = vp.y0 + shift;
    let mut out = Vec::with_capacity(noise.len());
    out.push(vp.y0);
    let mut running = 0.0;
    let mut prev = 0.0; // e^{-b t_{k-1}} B(t_{k-1})
    for (k, &bk) in noise.iter().enumerate().skip(1) {
        let t = grid.node(k);
        let growth = (b * t).exp();
        let discounted = bk / growth;
        running += 0.5 * dt * (prev + discounted);
        prev = discounted;
        out.push(start * growth - shift + sigma * (bk + b * growth * running));
    }
    Ok(out)
}

/// Shared path functionals: endpoints and Simpson integrals of `Y` and `Y^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathIntegrals {
    pub horizon: f64,
    pub y0: f64,
    pub y_end: f64,
    pub int_y: f64,
    pub int_y2: f64,
}

impl PathIntegrals {
    pub fn from_path(y: &[f64], grid: &SampleGrid) -> Result<Self> {
        check_path(y, grid)?;
        let dt = grid.step();
        let squares: Vec<f64> = y.iter().map(|v| v * v).collect();
        Ok(Self {
            horizon: grid.t_max,
            y0: y[0],
            y_end: y[y.len() - 1],
            int_y: simpson(y, dt),
            int_y2: simpson(&squares, dt),
        })
    }

    /// `T int Y^2 - (int Y)^2`.
    pub fn denominator(&self) -> f64 {
        self.horizon * self.int_y2 - self.int_y * self.int_y
    }
}

/// Output of [`estimate_drift`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftEstimate {
    pub a_hat: f64,
    pub b_hat: f64,
    pub horizon: f64,
    pub denominator: f64,
}

/// Least-squares estimators of `(a, b)` from one observed path.
///
/// `a_hat = (Y_T - y0)(int Y^2 - (Y_T + y0)/2 int Y) / den`,
/// `b_hat = (Y_T - y0)(T (Y_T + y0)/2 - int Y) / den`,
/// `den = T int Y^2 - (int Y)^2`; `y0` is the first observed sample.
pub fn estimate_drift(y: &[f64], grid: &SampleGrid) -> Result<DriftEstimate> {
    if grid.n_steps < 2 {
        return Err(Error::Config("estimation needs at least two grid steps".into()));
    }
    let pi = PathIntegrals::from_path(y, grid)?;
    let den = pi.denominator();
    let max_sq = y.iter().fold(0.0f64, |m, v| m.max(v * v));
    let threshold = 1e-12 * pi.horizon * max_sq;
    if den.is_nan() || den <= threshold {
        return Err(Error::DegenerateDenominator {
            denominator: den,
            threshold,
        });
    }
    let rise = pi.y_end - pi.y0;
    let mid = 0.5 * (pi.y_end + pi.y0);
    Ok(DriftEstimate {
        a_hat: rise * (pi.int_y2 - mid * pi.int_y) / den,
        b_hat: rise * (pi.horizon * mid - pi.int_y) / den,
        horizon: pi.horizon,
        denominator: den,
    })
}

/// `(Z_T, U_T, V_T)` for one noise path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Auxiliary {
    pub z: f64,
    pub u: f64,
    pub v: f64,
}

/// `Z_T = int_0^T e^{-bs} B ds`, `U_T = e^{-bT} int_0^T e^{bs} B ds`, `V_T = B(T) - b U_T`.
///
/// `U` is carried in its discounted form, multiplied by `e^{-b dt}` each step.
pub fn auxiliary_zuv(noise: &[f64], grid: &SampleGrid, b: f64) -> Result<Auxiliary> {
    check_noise(noise, grid)?;
    let dt = grid.step();
    let decay = (-b * dt).exp();
    let mut z = 0.0;
    let mut u = 0.0;
    let mut prev_disc = 0.0;
    for (k, pair) in noise.windows(2).enumerate() {
        let disc = pair[1] * (-b * grid.node(k + 1)).exp();
        z += 0.5 * dt * (prev_disc + disc);
        prev_disc = disc;
        u = decay * u + 0.5 * dt * (decay * pair[0] + pair[1]);
    }
    let end = noise[noise.len() - 1];
    Ok(Auxiliary { z, u, v: end - b * u })
}

/// Finite-horizon versions of the almost-sure limits of the path functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitSummands {
    /// `y0 + a/b + b sigma Z_T`.
    pub zeta: f64,
    /// `e^{-bT} Y_T`.
    pub scaled_y: f64,
    /// `e^{-bT} int Y`.
    pub scaled_int_y: f64,
    /// `e^{-2bT} int Y^2`.
    pub scaled_int_y2: f64,
}

pub fn limit_summands(y: &[f64], noise: &[f64], grid: &SampleGrid, vp: &VasicekParams) -> Result<LimitSummands> {
    let pi = PathIntegrals::from_path(y, grid)?;
    let aux = auxiliary_zuv(noise, grid, vp.b)?;
    let decay = (-vp.b * grid.t_max).exp();
    Ok(LimitSummands {
        zeta: vp.shifted_start() + vp.b * vp.sigma * aux.z,
        scaled_y: decay * pi.y_end,
        scaled_int_y: decay * pi.int_y,
        scaled_int_y2: decay * decay * pi.int_y2,
    })
}

/// Both sides of the exact algebraic identities satisfied by the estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorIdentities {
    /// `e^{bT} (b_hat - b) D_T`.
    pub b_lhs: f64,
    /// `F_T = e^{-bT}(Y_T - y0)((Y_T + y0)/2 - int Y / T) - b e^{-bT}(int Y^2 - (int Y)^2 / T)`.
    pub b_rhs: f64,
    /// `T a_hat`.
    pub a_lhs: f64,
    /// `Y_T - y0 - b_hat int Y`.
    pub a_rhs: f64,
}

/// Evaluates the identities with the same integrals as [`estimate_drift`];
/// `b` is the true slope the scaled error refers to.
pub fn estimator_identities(y: &[f64], grid: &SampleGrid, b: f64) -> Result<EstimatorIdentities> {
    let est = estimate_drift(y, grid)?;
    let pi = PathIntegrals::from_path(y, grid)?;
    let t = pi.horizon;
    let decay = (-b * t).exp();
    let centred = pi.int_y2 - pi.int_y * pi.int_y / t;
    let d_t = decay * decay * centred;
    let f_t = decay * (pi.y_end - pi.y0) * (0.5 * (pi.y_end + pi.y0) - pi.int_y / t) - b * decay * centred;
    Ok(EstimatorIdentities {
        b_lhs: (est.b_hat - b) / decay * d_t,
        b_rhs: f_t,
        a_lhs: t * est.a_hat,
        a_rhs: pi.y_end - pi.y0 - est.b_hat * pi.int_y,
    })
}
