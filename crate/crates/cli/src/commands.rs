use serde::{Deserialize, Serialize};
use tvm_core::asymptotics::{
    alpha_squared, beta_squared_euler, beta_squared_hypergeometric, beta_squared_quadrature, finite_t_second_moments,
    hypergeometric_route_available, AsymptoticConstants, FiniteMoments, LimitLawParams,
};
use tvm_core::export::{self, PathSidecar};
use tvm_core::montecarlo::{run_experiment, ExperimentConfig};
use tvm_core::tfbm::{sample_paths, SampleGrid, TfbmParams};
use tvm_core::vasicek::VasicekParams;

use crate::output::{commit, ensure_dir, read_json, stage, write_atomic, CliError};
use crate::{ConstantsArgs, ExperimentArgs, FileArgs, LemmaArgs, ModelArgs};

type Summary = Result<Option<String>, CliError>;

fn tfbm_params(m: &ModelArgs) -> Result<TfbmParams, CliError> {
    Ok(TfbmParams::new(m.hurst, m.lambda)?)
}

fn write_json_out<T: Serialize>(out: Option<&std::path::Path>, value: &T) -> Result<(), CliError> {
    match out {
        Some(path) => write_atomic(path, |w| export::write_json(w, value)),
        None => export::write_json(std::io::stdout().lock(), value)
            .map_err(|e| CliError::io(std::path::Path::new("<stdout>"), e)),
    }
}

#[derive(Serialize)]
struct ConstantsOutput {
    alpha_sq: f64,
    beta_sq_quadrature: f64,
    beta_sq_hypergeometric: f64,
    /// `series` or `euler`, depending on the size of the 2F1 argument.
    hypergeometric_route: &'static str,
    rel_gap: f64,
    sigma_matrix: [[f64; 3]; 3],
    limit_law_params: LimitLawParams,
}

pub fn constants(args: &ConstantsArgs) -> Summary {
    let p = tfbm_params(&args.model)?;
    let b = args.model.b;
    let vp = VasicekParams::new(args.a, b, args.sigma, args.y0)?;
    let alpha_sq = alpha_squared(&p);
    let quad = beta_squared_quadrature(&p, b)?;
    let (hyp, route) = if hypergeometric_route_available(&p, b) {
        (beta_squared_hypergeometric(&p, b)?, "series")
    } else {
        (beta_squared_euler(&p, b)?, "euler")
    };
    let c = AsymptoticConstants::from_parts(alpha_sq, quad, b)?;
    let out = ConstantsOutput {
        alpha_sq,
        beta_sq_quadrature: quad,
        beta_sq_hypergeometric: hyp,
        hypergeometric_route: route,
        rel_gap: (quad - hyp).abs() / quad,
        sigma_matrix: c.sigma_matrix,
        limit_law_params: LimitLawParams::new(&c, &vp),
    };
    write_json_out(args.out.as_deref(), &out)?;
    Ok(args
        .out
        .as_ref()
        .map(|path| format!("constants written to {} (rel_gap {:.2e})", path.display(), out.rel_gap)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleConfig {
    tfbm: TfbmParams,
    /// Time units.
    horizon: f64,
    /// Time units.
    step: f64,
    n_paths: usize,
    seed: u64,
}

pub fn sample(args: &FileArgs) -> Summary {
    let cfg: SampleConfig = read_json(&args.config)?;
    let seed = args.seed.unwrap_or(cfg.seed);
    let grid = SampleGrid::with_step(cfg.horizon, cfg.step)?;
    let paths = sample_paths(&cfg.tfbm, &grid, cfg.n_paths, seed)?;
    let sidecar = PathSidecar::new(cfg.tfbm, &paths);
    let meta = args.out.with_extension("json");
    commit(vec![
        stage(&args.out, |w| export::write_paths_csv(w, &paths))?,
        stage(&meta, |w| export::write_json(w, &sidecar))?,
    ])?;
    Ok(Some(format!(
        "{} paths x {} nodes written to {} (metadata {})",
        cfg.n_paths,
        grid.len(),
        args.out.display(),
        meta.display()
    )))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimateConfig {
    tfbm: TfbmParams,
    vasicek: VasicekParams,
    /// Time units.
    horizon: f64,
    /// Time units.
    step: f64,
    n_paths: usize,
    seed: u64,
}

pub fn estimate(args: &FileArgs) -> Summary {
    let cfg: EstimateConfig = read_json(&args.config)?;
    let exp = ExperimentConfig {
        tfbm: cfg.tfbm,
        vasicek: cfg.vasicek,
        horizons: vec![cfg.horizon],
        step: cfg.step,
        n_replications: cfg.n_paths,
        master_seed: args.seed.unwrap_or(cfg.seed),
        tests: Vec::new(),
        limit_draws: None,
        significance: 0.01,
    };
    let report = run_experiment(&exp)?;
    write_atomic(&args.out, |w| export::write_estimates_csv(w, &report.rows))?;
    Ok(Some(format!(
        "{} estimates written to {} ({} excluded)",
        report.row_count,
        args.out.display(),
        report.excluded.len()
    )))
}

pub fn experiment(args: &ExperimentArgs) -> Summary {
    let mut cfg: ExperimentConfig = read_json(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    cfg.validate()?;
    let report = run_experiment(&cfg)?;
    ensure_dir(&args.out_dir)?;
    commit(vec![
        stage(&args.out_dir.join("report.json"), |w| {
            export::write_report_json(w, &report)
        })?,
        stage(&args.out_dir.join("replications.csv"), |w| {
            export::write_replications_csv(w, &report.rows)
        })?,
    ])?;
    let verdicts = report
        .verdicts
        .iter()
        .map(|v| format!("{}={}", v.check.as_str(), if v.passed { "pass" } else { "fail" }))
        .collect::<Vec<_>>()
        .join(" ");
    Ok(Some(format!(
        "{} rows, {} excluded, written to {}{}{}",
        report.row_count,
        report.excluded.len(),
        args.out_dir.display(),
        if verdicts.is_empty() { "" } else { "; " },
        verdicts
    )))
}

/// `bT` values at which the finite-horizon moments are evaluated.
const LEMMA_BT: [f64; 4] = [5.0, 10.0, 20.0, 40.0];
const MONOTONE_SLACK: f64 = 1e-9;
const NEGLIGIBLE_BOUND: f64 = 1e-6;

#[derive(Serialize)]
struct LemmaCheck {
    name: String,
    passed: bool,
    value: f64,
    bound: f64,
}

#[derive(Serialize)]
struct LemmaOutput {
    hurst: f64,
    lambda: f64,
    b: f64,
    moments: Vec<FiniteMoments>,
    limit: [[f64; 3]; 3],
    checks: Vec<LemmaCheck>,
    passed: bool,
}

fn monotone(name: &str, values: &[f64], target: f64) -> LemmaCheck {
    let gaps: Vec<f64> = values.iter().map(|v| (v - target).abs()).collect();
    let worst_rise = gaps.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    LemmaCheck {
        name: format!("{name} approaches its limit monotonically"),
        passed: worst_rise <= MONOTONE_SLACK,
        value: worst_rise,
        bound: MONOTONE_SLACK,
    }
}

pub fn verify_lemmas(args: &LemmaArgs) -> Summary {
    let p = tfbm_params(&args.model)?;
    let b = args.model.b;
    let c = AsymptoticConstants::from_parts(alpha_squared(&p), beta_squared_quadrature(&p, b)?, b)?;
    let moments = LEMMA_BT
        .iter()
        .map(|bt| finite_t_second_moments(&p, b, bt / b))
        .collect::<Result<Vec<_>, _>>()?;
    let s = c.sigma_matrix;
    let last = moments.last().expect("four horizons");
    let eu2: Vec<f64> = moments.iter().map(|m| m.eu2).collect();
    let ev2: Vec<f64> = moments.iter().map(|m| m.ev2).collect();
    let mut checks = vec![monotone("EU^2", &eu2, s[1][1]), monotone("EV^2", &ev2, s[2][2])];
    let limits = [
        ("EZ^2", last.ez2, s[0][0]),
        ("EU^2", last.eu2, s[1][1]),
        ("EV^2", last.ev2, s[2][2]),
        ("EZU", last.ezu, s[0][1]),
        ("EZV", last.ezv, 0.0),
        ("EUV", last.euv, 0.0),
    ];
    for (name, got, want) in limits {
        let gap = (got - want).abs();
        checks.push(LemmaCheck {
            name: format!("{name} at bT = {} within bound of its limit", LEMMA_BT[3]),
            passed: gap <= NEGLIGIBLE_BOUND,
            value: gap,
            bound: NEGLIGIBLE_BOUND,
        });
    }
    let passed = checks.iter().all(|c| c.passed);
    let failed = checks.iter().filter(|c| !c.passed).count();
    let out = LemmaOutput {
        hurst: p.hurst(),
        lambda: p.lambda(),
        b,
        moments,
        limit: s,
        checks,
        passed,
    };
    write_json_out(args.out.as_deref(), &out)?;
    if !passed {
        return Err(CliError::Numeric(format!("{failed} moment check(s) failed")));
    }
    Ok(args
        .out
        .as_ref()
        .map(|path| format!("all moment checks passed; written to {}", path.display())))
}
