//! Estimators and Kolmogorov–Smirnov tests.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

/// Pairwise summation: error grows like `log n` and the result does not
/// depend on how replications were scheduled.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 32 {
        return x.iter().sum();
    }
    let (a, b) = x.split_at(x.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

pub fn mean(x: &[f64]) -> f64 {
    pairwise_sum(x) / x.len() as f64
}

/// Sample mean and unbiased sample variance.
pub fn mean_var(x: &[f64]) -> (f64, f64) {
    let m = mean(x);
    if x.len() < 2 {
        return (m, 0.0);
    }
    let sq: Vec<f64> = x.iter().map(|v| (v - m) * (v - m)).collect();
    (m, pairwise_sum(&sq) / (x.len() - 1) as f64)
}

/// Sample mean and its standard error.
pub fn mean_se(x: &[f64]) -> (f64, f64) {
    let (m, v) = mean_var(x);
    (m, (v / x.len() as f64).sqrt())
}

/// Sample variance and a standard error for it, from the fourth central moment.
pub fn var_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (m, v) = mean_var(x);
    let m4: Vec<f64> = x.iter().map(|a| (a - m).powi(4)).collect();
    let mu4 = pairwise_sum(&m4) / n;
    (v, ((mu4 - v * v * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt())
}

pub fn normal_cdf(x: f64, mean: f64, sd: f64) -> f64 {
    Normal::new(mean, sd).expect("positive standard deviation").cdf(x)
}

/// Kolmogorov distribution tail `Q(λ) = P(K > λ)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (1..=20).map(|k| (((2 * k - 1) as f64).powi(2) * c).exp()).sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

fn asymptotic_p(d: f64, n_eff: f64) -> f64 {
    let sq = n_eff.sqrt();
    kolmogorov_q((sq + 0.12 + 0.11 / sq) * d)
}

/// One-sample KS test; returns `(D, p)` with the asymptotic p-value.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    if samples.len() < 30 {
        return Err(Error::OutOfRange(format!("KS test needs at least 30 samples, got {}", samples.len())));
    }
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let f = cdf(v);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok((d, asymptotic_p(d, n)))
}

/// Two-sample KS test; ties across samples are handled by stepping both
/// empirical distribution functions past equal values together.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::OutOfRange("two-sample KS test needs non-empty samples".into()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] == v {
            i += 1;
        }
        while j < y.len() && y[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok((d, asymptotic_p(d, n * m / (n + m))))
}
