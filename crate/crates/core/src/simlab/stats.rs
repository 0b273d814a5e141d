//! Small statistics helpers for the experiments.

use statrs::distribution::{ContinuousCDF, Normal};

pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// One-sample Kolmogorov-Smirnov statistic `sup_x |F_n(x) − F(x)|`.
/// Non-finite samples are ignored; returns `None` if nothing is left.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Option<f64> {
    let mut xs: Vec<f64> = samples.iter().copied().filter(|v| v.is_finite()).collect();
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d.max(above).max(below)
    });
    Some(d)
}

/// KS statistic against `N(0, 1)`.
pub fn ks_normal(samples: &[f64]) -> Option<f64> {
    ks_statistic(samples, normal_cdf)
}

/// Asymptotic KS critical value `c(α)/√n` for α ∈ {0.05, 0.01}.
pub fn ks_critical(alpha: f64, n: usize) -> f64 {
    let c = if alpha <= 0.01 { 1.63 } else { 1.36 };
    c / (n as f64).sqrt()
}

pub fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (s, c) = xs.into_iter().fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    (c > 0).then(|| s / c as f64)
}
