//! Replicated simulate-then-estimate runs over one or more horizons.

use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::asymptotics::{self, AsymptoticConstants, LimitLawParams, MAX_BT};
use crate::error::{Error, Result};
use crate::montecarlo::ks::{ks_one_sample, normal_cdf, KsResult, MIN_SAMPLES};
use crate::montecarlo::verify::{verify_theorem, Verdict, VerifyOptions};
use crate::rng::derive_seed;
use crate::tfbm::{SampleGrid, TfbmParams, TfbmSampler, MAX_STEPS};
use crate::vasicek::{auxiliary_zuv, estimate_drift, simulate_vasicek, VasicekParams};

pub const SCHEMA_VERSION: u32 = 1;

/// Checks that [`verify_theorem`] can run on the largest horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    /// One-sample KS of `T (a_hat - a)` against `N(0, sigma^2 alpha^2)`.
    ANormal,
    /// Two-sample KS of `e^{bT} (b_hat - b)` against `eta_1 / eta_2` draws.
    BRatio,
    /// Entrywise covariance of `(Z_T, U_T, V_T)` against its exact value.
    ZuvCovariance,
    /// KS on three projections of the pair of scaled errors.
    Joint,
}

impl CheckName {
    pub const ALL: [CheckName; 4] = [
        CheckName::ANormal,
        CheckName::BRatio,
        CheckName::ZuvCovariance,
        CheckName::Joint,
    ];

    /// The name used in configs and reports.
    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::ANormal => "a_normal",
            CheckName::BRatio => "b_ratio",
            CheckName::ZuvCovariance => "zuv_covariance",
            CheckName::Joint => "joint",
        }
    }
}

fn all_checks() -> Vec<CheckName> {
    CheckName::ALL.to_vec()
}

fn default_significance() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub tfbm: TfbmParams,
    pub vasicek: VasicekParams,
    /// Observation horizons `T` (time units).
    pub horizons: Vec<f64>,
    /// Grid spacing `Delta` (time units); every `T / Delta` must be an integer.
    pub step: f64,
    pub n_replications: usize,
    pub master_seed: u64,
    #[serde(default = "all_checks")]
    pub tests: Vec<CheckName>,
    /// Number of limit-law draws compared against; defaults to `n_replications`.
    #[serde(default)]
    pub limit_draws: Option<usize>,
    #[serde(default = "default_significance")]
    pub significance: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() {
            return Err(Error::Config("at least one horizon is required".into()));
        }
        if self.n_replications == 0 {
            return Err(Error::Config("n_replications must be positive".into()));
        }
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(Error::Config(format!(
                "significance must lie in (0, 1), got {}",
                self.significance
            )));
        }
        let b = self.vasicek.b();
        for &t in &self.horizons {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("horizon {t} must be positive")));
            }
            if b * t > MAX_BT {
                return Err(Error::Config(format!(
                    "b*T = {} exceeds the overflow guard b*T <= {MAX_BT} (T = {t})",
                    b * t
                )));
            }
            let grid = SampleGrid::with_step(t, self.step).map_err(|e| Error::Config(e.to_string()))?;
            if grid.n_steps > MAX_STEPS {
                return Err(Error::Config(format!(
                    "T/step = {} exceeds the factorisation bound {MAX_STEPS} (T = {t})",
                    grid.n_steps
                )));
            }
            if grid.n_steps < 2 {
                return Err(Error::Config(format!("T/step must be at least 2 (T = {t})")));
            }
        }
        Ok(())
    }

    pub fn grid(&self, horizon_index: usize) -> Result<SampleGrid> {
        SampleGrid::with_step(self.horizons[horizon_index], self.step)
    }

    /// Key of the random streams of one horizon; replication `i` uses stream `i`.
    pub fn horizon_seed(&self, horizon_index: usize) -> u64 {
        derive_seed(self.master_seed, horizon_index as u64)
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub replication: u64,
    pub seed: u64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub a_hat: f64,
    pub b_hat: f64,
    /// `T (a_hat - a)`.
    pub a_scaled: f64,
    /// `e^{bT} (b_hat - b)`.
    pub b_scaled: f64,
    pub z_t: f64,
    pub u_t: f64,
    pub v_t: f64,
    pub denominator: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedReplication {
    pub replication: u64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonSummary {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n_steps: usize,
    pub included: usize,
    pub excluded: usize,
    pub a_scaled_mean: f64,
    pub a_scaled_var: f64,
    pub median_abs_a_error: f64,
    pub median_abs_b_error: f64,
    pub zuv_mean: [f64; 3],
    pub zuv_cov: [[f64; 3]; 3],
    /// One-sample KS of `T (a_hat - a)` against its normal limit.
    pub ks_a: Option<KsResult>,
    /// Relative diagonal jitter the covariance factorisation needed.
    pub jitter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub code_version: String,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub row_count: usize,
    #[serde(skip)]
    pub rows: Vec<ReplicationRow>,
    pub excluded: Vec<ExcludedReplication>,
    pub constants: AsymptoticConstants,
    pub limit_law: LimitLawParams,
    pub horizons: Vec<HorizonSummary>,
    pub verdicts: Vec<Verdict>,
    pub provenance: Provenance,
}

impl ExperimentReport {
    pub fn rows_at(&self, horizon: f64) -> impl Iterator<Item = &ReplicationRow> {
        self.rows.iter().filter(move |r| r.horizon == horizon)
    }

    /// Table content without provenance, for determinism comparisons.
    pub fn same_results(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.excluded == other.excluded
            && self.horizons == other.horizons
            && self.verdicts == other.verdicts
    }
}

/// Where the driving noise comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseSource {
    #[default]
    Tfbm,
    /// `B = 0`: noiseless trajectories, for checking the pipeline itself.
    Zero,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with_noise(cfg, NoiseSource::Tfbm)
}

enum Outcome {
    Row(ReplicationRow),
    Excluded(ExcludedReplication),
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

pub fn run_experiment_with_noise(cfg: &ExperimentConfig, noise: NoiseSource) -> Result<ExperimentReport> {
    cfg.validate()?;
    let started = now_ms();
    let vp = cfg.vasicek;
    let constants = asymptotics::sigma_matrix(&cfg.tfbm, vp.b())?;
    let limit_law = LimitLawParams::new(&constants, &vp);

    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    let mut horizons = Vec::new();
    for (h, &t) in cfg.horizons.iter().enumerate() {
        let grid = cfg.grid(h)?;
        let seed = cfg.horizon_seed(h);
        let sampler = match noise {
            NoiseSource::Tfbm => Some(TfbmSampler::new(cfg.tfbm, grid)?),
            NoiseSource::Zero => None,
        };
        let outcomes: Vec<Result<Outcome>> = (0..cfg.n_replications as u64)
            .into_par_iter()
            .map(|i| {
                let path = match &sampler {
                    Some(s) => s.path(seed, i),
                    None => vec![0.0; grid.len()],
                };
                replicate(&vp, &grid, &path, seed, i).map_err(|e| Error::Replication {
                    horizon: t,
                    replication: i,
                    source: Box::new(e),
                })
            })
            .collect();
        let mut here = Vec::with_capacity(cfg.n_replications);
        let mut dropped = 0;
        for outcome in outcomes {
            match outcome? {
                Outcome::Row(r) => here.push(r),
                Outcome::Excluded(e) => {
                    dropped += 1;
                    excluded.push(e)
                }
            }
        }
        horizons.push(summarise(
            t,
            grid.n_steps,
            &here,
            dropped,
            &limit_law,
            sampler.as_ref().map_or(0.0, |s| s.jitter()),
        ));
        rows.extend(here);
    }

    let mut report = ExperimentReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        row_count: rows.len(),
        rows,
        excluded,
        constants,
        limit_law,
        horizons,
        verdicts: Vec::new(),
        provenance: Provenance {
            config_hash: cfg.hash(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix_ms: started,
            finished_unix_ms: 0,
        },
    };
    if !cfg.tests.is_empty() {
        let opts = VerifyOptions {
            significance: cfg.significance,
            limit_draws: cfg.limit_draws.unwrap_or(cfg.n_replications),
            seed: derive_seed(cfg.master_seed, u64::MAX),
        };
        report.verdicts = verify_theorem(&report, &cfg.tests, &opts)?;
    }
    report.provenance.finished_unix_ms = now_ms();
    Ok(report)
}

fn replicate(vp: &VasicekParams, grid: &SampleGrid, noise: &[f64], seed: u64, i: u64) -> Result<Outcome> {
    let y = simulate_vasicek(vp, grid, noise)?;
    let est = match estimate_drift(&y, grid) {
        Ok(e) => e,
        Err(e @ Error::DegenerateDenominator { .. }) => {
            return Ok(Outcome::Excluded(ExcludedReplication {
                replication: i,
                horizon: grid.t_max,
                reason: e.to_string(),
            }))
        }
        Err(e) => return Err(e),
    };
    let aux = auxiliary_zuv(noise, grid, vp.b())?;
    let t = grid.t_max;
    Ok(Outcome::Row(ReplicationRow {
        replication: i,
        seed,
        horizon: t,
        a_hat: est.a_hat,
        b_hat: est.b_hat,
        a_scaled: t * (est.a_hat - vp.a()),
        b_scaled: (vp.b() * t).exp() * (est.b_hat - vp.b()),
        z_t: aux.z,
        u_t: aux.u,
        v_t: aux.v,
        denominator: est.denominator,
    }))
}

pub(crate) fn median(mut x: Vec<f64>) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.sort_by(f64::total_cmp);
    let n = x.len();
    if n % 2 == 1 {
        x[n / 2]
    } else {
        0.5 * (x[n / 2 - 1] + x[n / 2])
    }
}

/// Sample mean and unbiased covariance of 3-vectors.
pub(crate) fn mean_cov(x: &[[f64; 3]]) -> ([f64; 3], [[f64; 3]; 3]) {
    let n = x.len() as f64;
    let mut mean = [0.0; 3];
    for v in x {
        for k in 0..3 {
            mean[k] += v[k] / n;
        }
    }
    let mut cov = [[0.0; 3]; 3];
    for v in x {
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += (v[i] - mean[i]) * (v[j] - mean[j]);
            }
        }
    }
    for row in cov.iter_mut() {
        for c in row.iter_mut() {
            *c /= (n - 1.0).max(1.0);
        }
    }
    (mean, cov)
}

fn summarise(
    t: f64,
    n_steps: usize,
    rows: &[ReplicationRow],
    excluded: usize,
    lp: &LimitLawParams,
    jitter: f64,
) -> HorizonSummary {
    let n = rows.len() as f64;
    let a: Vec<f64> = rows.iter().map(|r| r.a_scaled).collect();
    let a_mean = a.iter().sum::<f64>() / n;
    let a_var = a.iter().map(|x| (x - a_mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let zuv: Vec<[f64; 3]> = rows.iter().map(|r| [r.z_t, r.u_t, r.v_t]).collect();
    let (zuv_mean, zuv_cov) = mean_cov(&zuv);
    let sd = lp.a_limit_var.sqrt();
    let ks_a = (rows.len() >= MIN_SAMPLES)
        .then(|| ks_one_sample(&a, |x| normal_cdf(x / sd)).ok())
        .flatten();
    HorizonSummary {
        horizon: t,
        n_steps,
        included: rows.len(),
        excluded,
        a_scaled_mean: a_mean,
        a_scaled_var: a_var,
        median_abs_a_error: median(rows.iter().map(|r| (r.a_scaled / t).abs()).collect()),
        median_abs_b_error: median(rows.iter().map(|r| (r.b_hat - lp.b).abs()).collect()),
        zuv_mean,
        zuv_cov,
        ks_a,
        jitter,
    }
}
