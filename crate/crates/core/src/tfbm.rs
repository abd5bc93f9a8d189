//! Tempered fractional Brownian motion: covariance kernel and exact sampling.
//!
//! The variance of `B(t)` is
//! `alpha^2 - kappa t^H K_H(lambda t)` with
//! `alpha^2 = 2 Gamma(2H) / (2 lambda)^{2H}` and
//! `kappa = 2 Gamma(H + 1/2) / (sqrt(pi) (2 lambda)^H)`.
//! Both terms tend to `alpha^2` as `t -> 0`, so below `lambda t = 1e-2` the
//! difference is evaluated from the small-argument expansion of
//! `z^H K_H(z)` with the constant term removed analytically.
//!
//! Paths are drawn exactly on a uniform grid from the Cholesky factor of the
//! covariance matrix over the nodes `t_1 .. t_n` (`B(0) = 0` is prepended).

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{CholeskyFactor, SymmetricMatrix};
use crate::rng::stream_rng;
use crate::specfun::{bessel_k_scaled, gamma, log_gamma, EULER_GAMMA};

/// Largest supported exponent `H`.
pub const MAX_HURST: f64 = 2.0;
/// Below this value of `lambda t` the variance uses the small-argument series.
pub const SERIES_SWITCH: f64 = 1e-2;
/// Dense factorisation bound on the number of grid steps.
pub const MAX_STEPS: usize = 5000;
/// Diagonal shifts tried in turn, relative to the mean diagonal.
pub const JITTER_LADDER: [f64; 3] = [0.0, 1e-12, 1e-10];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTfbmParams", into = "RawTfbmParams")]
pub struct TfbmParams {
    hurst: f64,
    lambda: f64,
}

#[derive(Serialize, Deserialize)]
struct RawTfbmParams {
    hurst: f64,
    lambda: f64,
}

impl TryFrom<RawTfbmParams> for TfbmParams {
    type Error = Error;
    fn try_from(raw: RawTfbmParams) -> Result<Self> {
        TfbmParams::new(raw.hurst, raw.lambda)
    }
}

impl From<TfbmParams> for RawTfbmParams {
    fn from(p: TfbmParams) -> Self {
        RawTfbmParams {
            hurst: p.hurst,
            lambda: p.lambda,
        }
    }
}

impl TfbmParams {
    pub fn new(hurst: f64, lambda: f64) -> Result<Self> {
        ensure_finite("H", hurst)?;
        ensure_finite("lambda", lambda)?;
        if hurst <= 0.0 {
            return Err(Error::Domain {
                name: "H",
                value: hurst,
                reason: "H must be positive",
            });
        }
        if hurst > MAX_HURST {
            return Err(Error::Domain {
                name: "H",
                value: hurst,
                reason: "H above 2 is not supported",
            });
        }
        if lambda <= 0.0 {
            return Err(Error::Domain {
                name: "lambda",
                value: lambda,
                reason: "lambda must be positive",
            });
        }
        Ok(Self { hurst, lambda })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Limiting variance `alpha^2 = 2 Gamma(2H) / (2 lambda)^{2H}`.
    pub fn alpha_sq(&self) -> f64 {
        let h = self.hurst;
        let lg = log_gamma(2.0 * h).expect("2H > 0");
        2.0 * (lg - 2.0 * h * (2.0 * self.lambda).ln()).exp()
    }

    /// `kappa lambda^{-H}`: the prefactor of `z^H K_H(z)` in the variance, `z = lambda t`.
    fn bessel_prefactor(&self) -> f64 {
        let h = self.hurst;
        let lg = log_gamma(h + 0.5).expect("H + 1/2 > 0");
        2.0 * (lg - 0.5 * std::f64::consts::PI.ln() - h * (2.0 * self.lambda).ln() - h * self.lambda.ln()).exp()
    }
}

/// Uniform grid `t_k = k t_max / n_steps`, `k = 0 ..= n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub t_max: f64,
    pub n_steps: usize,
}

impl SampleGrid {
    pub fn new(t_max: f64, n_steps: usize) -> Result<Self> {
        ensure_finite("t_max", t_max)?;
        if t_max <= 0.0 {
            return Err(Error::Domain {
                name: "t_max",
                value: t_max,
                reason: "grid horizon must be positive",
            });
        }
        if n_steps == 0 {
            return Err(Error::Config("grid needs at least one step".into()));
        }
        Ok(Self { t_max, n_steps })
    }

    /// Grid with step `step` covering `[0, horizon]`; `horizon / step` must be an integer.
    pub fn with_step(horizon: f64, step: f64) -> Result<Self> {
        ensure_finite("step", step)?;
        if step <= 0.0 {
            return Err(Error::Domain {
                name: "step",
                value: step,
                reason: "time step must be positive",
            });
        }
        let ratio = horizon / step;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-6 * n.max(1.0) {
            return Err(Error::Config(format!(
                "horizon {horizon} is not an integer multiple of step {step}"
            )));
        }
        Self::new(horizon, n as usize)
    }

    pub fn step(&self) -> f64 {
        self.t_max / self.n_steps as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        self.t_max * k as f64 / self.n_steps as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.node(k)).collect()
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A batch of paths on a common grid; row `i` holds path `i` at all nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub grid: SampleGrid,
    pub seed: u64,
    pub n_paths: usize,
    values: Vec<f64>,
}

impl PathSet {
    pub fn path(&self, i: usize) -> &[f64] {
        let m = self.grid.len();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.grid.len())
    }

    pub fn is_empty(&self) -> bool {
        self.n_paths == 0
    }
}

/// `Var B(t) = C_t^2 t^{2H}`.
pub fn variance(p: &TfbmParams, t: f64) -> Result<f64> {
    ensure_finite("t", t)?;
    if t < 0.0 {
        return Err(Error::Domain {
            name: "t",
            value: t,
            reason: "time must be non-negative",
        });
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let z = p.lambda * t;
    if z < SERIES_SWITCH {
        Ok(p.bessel_prefactor() * origin_gap(p.hurst, z))
    } else {
        Ok(variance_direct(p, z))
    }
}

fn variance_direct(p: &TfbmParams, z: f64) -> f64 {
    let h = p.hurst;
    let k = bessel_k_scaled(h, z).expect("validated order and argument");
    let zh_kh = (h * z.ln() - z).exp() * k;
    let v = p.alpha_sq() - p.bessel_prefactor() * zh_kh;
    v.max(0.0)
}

/// `lim_{s->0} s^H K_H(s) - z^H K_H(z)` for small `z`.
fn origin_gap(h: f64, z: f64) -> f64 {
    let q = 0.25 * z * z;
    let nearest = h.round();
    // Within 1e-9 of an integer order the fractional expansion loses its
    // digits to cancellation; the integer (logarithmic) expansion is used.
    if (h - nearest).abs() < 1e-9 {
        return origin_gap_integer(nearest as u32, z);
    }
    // 2^{H-1} Gamma(H) sum_{k>=1} q^k / (k! (1-H)_k)
    let mut regular = 0.0;
    let mut term = 1.0;
    for k in 1..40 {
        let kf = k as f64;
        term *= q / (kf * (kf - h));
        regular += term;
        if term.abs() < 1e-18 * regular.abs() {
            break;
        }
    }
    // z^{2H} sum_{k>=0} q^k / (k! (1+H)_k)
    let mut singular = 1.0;
    let mut term = 1.0;
    for k in 1..40 {
        let kf = k as f64;
        term *= q / (kf * (kf + h));
        singular += term;
        if term.abs() < 1e-18 * singular {
            break;
        }
    }
    let two = 2f64;
    -two.powf(h - 1.0) * gamma(h) * regular - two.powf(-h - 1.0) * gamma(-h) * z.powf(2.0 * h) * singular
}

/// Integer-order form of [`origin_gap`] from the logarithmic series of `K_n`.
fn origin_gap_integer(n: u32, z: f64) -> f64 {
    let q = 0.25 * z * z;
    let log_half = (0.5 * z).ln();
    let nf = n as f64;
    // I_n(z) and sum_k (psi(k+1) + psi(n+k+1)) q^k / (k! (n+k)!)
    let mut term = 1.0 / (1..=n).map(|i| i as f64).product::<f64>();
    let mut i_sum = term;
    let mut psi_k = -EULER_GAMMA;
    let mut psi_nk = -EULER_GAMMA + (1..=n).map(|i| 1.0 / i as f64).sum::<f64>();
    let mut psi_sum = (psi_k + psi_nk) * term;
    for k in 1..40 {
        let kf = k as f64;
        term *= q / (kf * (kf + nf));
        psi_k += 1.0 / kf;
        psi_nk += 1.0 / (kf + nf);
        i_sum += term;
        psi_sum += (psi_k + psi_nk) * term;
        if term < 1e-18 * i_sum {
            break;
        }
    }
    let i_n = (0.5 * z).powi(n as i32) * i_sum;
    match n {
        1 => -z * log_half * i_n + q * psi_sum,
        2 => 0.5 * z * z + z * z * log_half * i_n - 0.5 * q * z * z * psi_sum,
        _ => unreachable!("orders above 2 are outside the supported range"),
    }
}

/// `Cov(B(s), B(t)) = (Var(t) + Var(s) - Var(|t - s|)) / 2`.
pub fn covariance(p: &TfbmParams, s: f64, t: f64) -> Result<f64> {
    let vs = variance(p, s)?;
    let vt = variance(p, t)?;
    let vd = variance(p, (t - s).abs())?;
    Ok(0.5 * (vt + vs - vd))
}

/// Variances at the grid nodes, `v[k] = Var B(t_k)`.
pub fn node_variances(p: &TfbmParams, g: &SampleGrid) -> Vec<f64> {
    (0..=g.n_steps)
        .map(|k| variance(p, g.node(k)).expect("grid nodes are non-negative"))
        .collect()
}

/// Covariance matrix of `(B(t_1), ..., B(t_n))`.
///
/// On a uniform grid `|t_i - t_j| = |i - j| dt`, so only `n + 1` variances are needed.
pub fn covariance_matrix(p: &TfbmParams, g: &SampleGrid) -> SymmetricMatrix {
    let v = node_variances(p, g);
    SymmetricMatrix::from_fn(g.n_steps, |i, j| {
        let (i, j) = (i + 1, j + 1);
        0.5 * (v[i] + v[j] - v[j.abs_diff(i)])
    })
}

/// Cholesky factor of the grid covariance, shared read-only across workers.
#[derive(Debug, Clone)]
pub struct TfbmSampler {
    params: TfbmParams,
    grid: SampleGrid,
    factor: CholeskyFactor,
    jitter: f64,
}

impl TfbmSampler {
    pub fn new(params: TfbmParams, grid: SampleGrid) -> Result<Self> {
        if grid.n_steps > MAX_STEPS {
            return Err(Error::Config(format!(
                "grid has {} steps; dense factorisation is limited to {MAX_STEPS}",
                grid.n_steps
            )));
        }
        let m = covariance_matrix(&params, &grid);
        let mean_diag = m.trace() / m.dim() as f64;
        let mut last_pivot = 0;
        for &rel in &JITTER_LADDER {
            match CholeskyFactor::factor(&m, rel * mean_diag) {
                Ok(factor) => {
                    return Ok(Self {
                        params,
                        grid,
                        factor,
                        jitter: rel,
                    })
                }
                Err(pivot) => last_pivot = pivot,
            }
        }
        Err(Error::Factorization {
            hurst: params.hurst,
            lambda: params.lambda,
            t_max: grid.t_max,
            n_steps: grid.n_steps,
            pivot: last_pivot,
            jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
        })
    }

    pub fn params(&self) -> &TfbmParams {
        &self.params
    }

    pub fn grid(&self) -> &SampleGrid {
        &self.grid
    }

    /// Relative diagonal shift that was needed for the factorisation.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    /// Writes path `index` of stream `seed` into `out` (length `n_steps + 1`).
    pub fn fill_path(&self, seed: u64, index: u64, out: &mut [f64]) {
        let n = self.grid.n_steps;
        assert_eq!(out.len(), n + 1, "output buffer must cover every grid node");
        let mut rng = stream_rng(seed, index);
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        out[0] = 0.0;
        self.factor.apply(&z, &mut out[1..]);
    }

    pub fn path(&self, seed: u64, index: u64) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        self.fill_path(seed, index, &mut out);
        out
    }
}

/// Draws `n_paths` exact TFBM paths; path `i` depends only on `(seed, i)`.
pub fn sample_paths(p: &TfbmParams, g: &SampleGrid, n_paths: usize, seed: u64) -> Result<PathSet> {
    if n_paths == 0 {
        return Ok(PathSet {
            grid: *g,
            seed,
            n_paths,
            values: Vec::new(),
        });
    }
    let sampler = TfbmSampler::new(*p, *g)?;
    let mut values = vec![0.0; n_paths * g.len()];
    values
        .par_chunks_mut(g.len())
        .enumerate()
        .for_each(|(i, row)| sampler.fill_path(seed, i as u64, row));
    Ok(PathSet {
        grid: *g,
        seed,
        n_paths,
        values,
    })
}
