//! TFBM kernel and sampler properties checked against independent oracles.

use nalgebra::{DMatrix, SymmetricEigen};
use tvm_core::tfbm::{covariance, covariance_matrix, sample_paths, variance, SampleGrid, TfbmParams, TfbmSampler};

fn tp(h: f64, l: f64) -> TfbmParams {
    TfbmParams::new(h, l).unwrap()
}

#[test]
fn covariance_matrix_is_positive_semidefinite() {
    let p = tp(0.7, 1.0);
    let g = SampleGrid::new(4.0, 8).unwrap();
    let m = covariance_matrix(&p, &g);
    let dense = DMatrix::from_fn(8, 8, |i, j| m.get(i, j));
    let eig = SymmetricEigen::new(dense).eigenvalues;
    let floor = -1e-12 * m.trace();
    for e in eig.iter() {
        assert!(*e > floor, "eigenvalue {e:e} below {floor:e}");
    }
}

#[test]
fn variance_is_bounded_by_its_limit() {
    for &h in &[0.2, 0.5, 0.7, 1.0, 1.3, 2.0] {
        for &l in &[0.5, 1.0, 3.0] {
            let p = tp(h, l);
            let alpha_sq = p.alpha_sq();
            for k in 0..=120 {
                let t = 1e-6 * 10f64.powf(k as f64 / 12.0);
                let v = variance(&p, t).unwrap();
                assert!(
                    v >= 0.0 && v <= alpha_sq * (1.0 + 1e-9),
                    "H {h} lambda {l} t {t}: {v} vs {alpha_sq}"
                );
                if l * t >= 50.0 {
                    assert!((v - alpha_sq).abs() <= 1e-6, "H {h} lambda {l} t {t}");
                }
            }
        }
    }
    let p = tp(0.7, 1.0);
    assert!((variance(&p, 200.0).unwrap() - p.alpha_sq()).abs() <= 1e-6);
}

fn variogram(p: &TfbmParams, s: f64, t: f64) -> f64 {
    variance(p, t).unwrap() + variance(p, s).unwrap() - 2.0 * covariance(p, s, t).unwrap()
}

fn variogram_ratio(p: &TfbmParams, s: f64, t: f64) -> f64 {
    variogram(p, s, t) / (t - s).abs().powf(2.0 * p.hurst()).min(1.0)
}

/// One constant `C` is fitted on the 50 x 50 grid over `[0, 20]^2` plus
/// near-diagonal pairs at each node, then must bound held-out random pairs.
#[test]
fn variogram_is_bounded_by_a_single_constant() {
    use rand::{Rng, SeedableRng};
    let nodes: Vec<f64> = (0..50).map(|k| 20.0 * k as f64 / 49.0).collect();
    let offsets = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1];
    for &h in &[0.3, 0.5, 0.7, 0.9] {
        let p = tp(h, 1.0);
        let mut c = 0.0f64;
        for &s in &nodes {
            for &t in &nodes {
                if s != t {
                    c = c.max(variogram_ratio(&p, s, t));
                }
            }
            for &d in &offsets {
                c = c.max(variogram_ratio(&p, s, s + d));
            }
        }
        assert!(c.is_finite() && c > 0.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(151);
        for _ in 0..2000 {
            let s = rng.random_range(0.0..20.0);
            let d = 10f64.powf(rng.random_range(-6.0..1.3));
            let t = (s + d).min(20.0);
            if t > s {
                let r = variogram_ratio(&p, s, t);
                assert!(r <= c, "H {h}: ratio {r} at ({s}, {t}) exceeds fitted C = {c}");
            }
        }
    }
}

fn max_cov_deviation(p: &TfbmParams, g: &SampleGrid, n_paths: usize, seed: u64) -> f64 {
    let set = sample_paths(p, g, n_paths, seed).unwrap();
    let analytic = covariance_matrix(p, g);
    let d = g.n_steps;
    let nf = n_paths as f64;
    let mut mean = vec![0.0; d];
    for path in set.paths() {
        for (m, x) in mean.iter_mut().zip(&path[1..]) {
            *m += x / nf;
        }
    }
    let mut cov = vec![0.0; d * d];
    for path in set.paths() {
        let x = &path[1..];
        for i in 0..d {
            let xi = x[i] - mean[i];
            for j in i..d {
                cov[i * d + j] += xi * (x[j] - mean[j]);
            }
        }
    }
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in i..d {
            worst = worst.max((cov[i * d + j] / (nf - 1.0) - analytic.get(i, j)).abs());
        }
    }
    worst
}

#[test]
fn empirical_covariance_error_shrinks_like_root_n() {
    let p = tp(0.7, 1.0);
    let g = SampleGrid::new(8.0, 64).unwrap();
    let small = max_cov_deviation(&p, &g, 5000, 61);
    let large = max_cov_deviation(&p, &g, 20_000, 62);
    let ratio = small / large;
    assert!((1.3..=3.2).contains(&ratio), "ratio {ratio} ({small:e} / {large:e})");
}

#[test]
fn terminal_variance_within_monte_carlo_error() {
    let p = tp(0.7, 1.0);
    let g = SampleGrid::new(8.0, 64).unwrap();
    let n = 20_000;
    let set = sample_paths(&p, &g, n, 3232).unwrap();
    let x: Vec<f64> = set.paths().map(|path| path[32]).collect();
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let sq: Vec<f64> = x.iter().map(|v| (v - mean).powi(2)).collect();
    let var = sq.iter().sum::<f64>() / (nf - 1.0);
    let m4 = sq.iter().map(|s| s * s).sum::<f64>() / nf;
    let se = ((m4 - var * var) / nf).sqrt();
    let want = variance(&p, g.node(32)).unwrap();
    assert!((var - want).abs() <= 4.0 * se, "{var} vs {want} (se {se})");
}

fn sup_quantile(p: &TfbmParams, horizon: f64, n_paths: usize, seed: u64) -> f64 {
    let g = SampleGrid::with_step(horizon, 0.05).unwrap();
    let sampler = TfbmSampler::new(*p, g).unwrap();
    let scale = horizon.sqrt().max(1.0);
    let mut sups: Vec<f64> = (0..n_paths as u64)
        .map(|i| sampler.path(seed, i).iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale)
        .collect();
    sups.sort_by(f64::total_cmp);
    sups[(0.99 * n_paths as f64) as usize]
}

#[test]
fn normalised_path_supremum_does_not_grow() {
    let p = tp(0.7, 1.0);
    let q8 = sup_quantile(&p, 8.0, 2000, 88);
    let q32 = sup_quantile(&p, 32.0, 2000, 3232);
    assert!(q32 <= 1.2 * q8, "99th percentile {q32} at T = 32 vs {q8} at T = 8");
}

#[test]
fn sampling_zero_paths_and_repeat_runs() {
    let p = tp(1.3, 0.5);
    let g = SampleGrid::new(2.0, 40).unwrap();
    assert!(sample_paths(&p, &g, 0, 1).unwrap().is_empty());
    let a = sample_paths(&p, &g, 16, 5).unwrap();
    let b = sample_paths(&p, &g, 16, 5).unwrap();
    assert_eq!(a, b);
    assert!(a.paths().all(|path| path[0] == 0.0));
}
