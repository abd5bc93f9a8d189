//! Kolmogorov-Smirnov statistics with asymptotic p-values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Effective sample size used for the p-value.
    pub effective_n: f64,
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `P(K > x)` for the Kolmogorov distribution.
///
/// For `x >= 1` the alternating series `2 sum (-1)^{k-1} e^{-2 k^2 x^2}` is
/// summed until a term drops below `1e-10`; below that the Jacobi theta form
/// `sqrt(2 pi)/x sum e^{-(2k-1)^2 pi^2 / (8 x^2)}` of the distribution function
/// converges faster.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.0 {
        let c = std::f64::consts::PI.powi(2) / (8.0 * x * x);
        let mut cdf = 0.0;
        for k in 1..100 {
            let odd = (2 * k - 1) as f64;
            let term = (-odd * odd * c).exp();
            cdf += term;
            if term < 1e-10 * cdf.max(f64::MIN_POSITIVE) {
                break;
            }
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / x;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += sign * term;
        if term < 1e-10 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value with Stephens' finite-sample correction of the scale.
fn p_value(d: f64, n: f64) -> f64 {
    let root = n.sqrt();
    kolmogorov_survival((root + 0.12 + 0.11 / root) * d)
}

fn check_len(got: usize) -> Result<()> {
    if got < MIN_SAMPLES {
        return Err(Error::TooFewSamples { min: MIN_SAMPLES, got });
    }
    Ok(())
}

fn sorted(x: &[f64]) -> Result<Vec<f64>> {
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::Invariant("KS input contains NaN".into()));
    }
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// One-sample test of `samples` against the continuous distribution function `cdf`.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    check_len(samples.len())?;
    let s = sorted(samples)?;
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(KsResult {
        statistic: d,
        p_value: p_value(d, n),
        effective_n: n,
    })
}

/// Two-sample test; ties are stepped over together so `x == y` gives `D = 0`.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<KsResult> {
    check_len(x.len())?;
    check_len(y.len())?;
    let (xs, ys) = (sorted(x)?, sorted(y)?);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < n && j < m {
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] == v {
            i += 1;
        }
        while j < m && ys[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    Ok(KsResult {
        statistic: d,
        p_value: p_value(d, ne),
        effective_n: ne,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn survival_matches_both_forms() {
        // Both expansions are valid everywhere; compare near the switch.
        for &x in &[0.8, 0.95, 1.0, 1.05, 1.3] {
            let mut alt = 0.0;
            for k in 1..200 {
                let kf = k as f64;
                alt += 2.0 * (-1f64).powi(k - 1) * (-2.0 * kf * kf * x * x).exp();
            }
            assert!((kolmogorov_survival(x) - alt).abs() < 1e-9, "x = {x}");
        }
        assert_eq!(kolmogorov_survival(0.0), 1.0);
        assert!(kolmogorov_survival(0.2) > 0.999_99);
        assert!(kolmogorov_survival(3.0) < 1e-7);
        // Classical 5% and 1% critical values.
        assert!((kolmogorov_survival(1.358) - 0.05).abs() < 5e-4);
        assert!((kolmogorov_survival(1.628) - 0.01).abs() < 2e-4);
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-15);
    }

    #[test]
    fn self_test_passes() {
        let mut rng = stream_rng(11, 0);
        let x: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(ks_one_sample(&x, normal_cdf).unwrap().p_value > 0.001);
    }

    #[test]
    fn constant_sample_at_median() {
        let x = vec![0.0; 50];
        assert!(ks_one_sample(&x, normal_cdf).unwrap().statistic >= 0.5);
    }

    #[test]
    fn uniform_fixture_matches_order_statistics() {
        let mut rng = stream_rng(5, 3);
        let x: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
        let mut s = x.clone();
        s.sort_by(f64::total_cmp);
        let brute = s
            .iter()
            .enumerate()
            .flat_map(|(i, &v)| [(i + 1) as f64 / 100.0 - v, v - i as f64 / 100.0])
            .fold(f64::MIN, f64::max);
        let d = ks_one_sample(&x, |v| v.clamp(0.0, 1.0)).unwrap().statistic;
        assert!((d - brute).abs() < 1e-12);
    }

    #[test]
    fn two_sample_trivial_cases() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let same = ks_two_sample(&x, &x).unwrap();
        assert_eq!(same.statistic, 0.0);
        assert_eq!(same.p_value, 1.0);
        let y: Vec<f64> = x.iter().map(|v| v + 100.0).collect();
        assert_eq!(ks_two_sample(&x, &y).unwrap().statistic, 1.0);
    }

    #[test]
    fn two_sample_same_generator() {
        let draw = |seed| {
            let mut rng = stream_rng(seed, 0);
            (0..10_000)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect::<Vec<f64>>()
        };
        assert!(ks_two_sample(&draw(1), &draw(2)).unwrap().p_value > 0.001);
    }

    #[test]
    fn too_few() {
        assert!(matches!(
            ks_one_sample(&[0.0; 19], normal_cdf),
            Err(Error::TooFewSamples { min: 20, got: 19 })
        ));
        assert!(ks_two_sample(&[0.0; 20], &[0.0; 5]).is_err());
    }
}
