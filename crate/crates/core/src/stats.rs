//! Small statistics helpers: normal CDF, Kolmogorov–Smirnov distance,
//! compensated moments, correlation.

use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::summation::CompensatedSum;

/// Standard normal CDF, `Φ(x) = erfc(−x/√2)/2`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `sup_x |F_n(x) − cdf(x)|` for the empirical CDF of `samples`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let c = cdf(x);
        let above = (i as f64 + 1.0) / n - c;
        let below = c - i as f64 / n;
        d.max(above).max(below)
    })
}

/// Asymptotic KS critical value `c(α)/√n` (`c = 1.36` at 5%, `1.63` at 1%).
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt() / (n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Standard error of the mean.
    pub std_err: f64,
}

/// Two-pass compensated mean and variance.
pub fn moments(xs: &[f64]) -> Moments {
    let n = xs.len() as f64;
    let mean = xs.iter().copied().collect::<CompensatedSum>().value() / n;
    let ss = xs
        .iter()
        .map(|&x| (x - mean) * (x - mean))
        .collect::<CompensatedSum>()
        .value();
    let variance = if xs.len() > 1 { ss / (n - 1.0) } else { 0.0 };
    Moments {
        n: xs.len() as u64,
        mean,
        variance,
        std_err: (variance / n).sqrt(),
    }
}

/// Pearson correlation of two equal-length samples.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mx = moments(xs).mean;
    let my = moments(ys).mean;
    let mut sxy = CompensatedSum::new();
    let mut sxx = CompensatedSum::new();
    let mut syy = CompensatedSum::new();
    for (&x, &y) in xs.iter().zip(ys) {
        sxy.add((x - mx) * (y - my));
        sxx.add((x - mx) * (x - mx));
        syy.add((y - my) * (y - my));
    }
    sxy.value() / (sxx.value() * syy.value()).sqrt()
}

/// Frequency of `pred` with its binomial standard error.
pub fn frequency(xs: &[f64], pred: impl Fn(f64) -> bool) -> (f64, f64) {
    let n = xs.len() as f64;
    let p = xs.iter().filter(|&&x| pred(x)).count() as f64 / n;
    (p, (p * (1.0 - p) / n).sqrt())
}
