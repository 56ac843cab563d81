//! Small sample-statistics helpers shared by the harnesses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    /// Whether `target` lies within `k` standard errors.
    pub fn brackets(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr
    }
}

pub fn mean_and_stderr(samples: &[f64]) -> Result<Estimate> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::parameter("samples", format!("need at least two samples, got {n}")));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(Estimate {
        value: mean,
        stderr: (var / n as f64).sqrt(),
    })
}

/// Fraction of `hits` in `n` Bernoulli trials with the binomial standard error.
pub fn proportion(hits: usize, n: usize) -> Estimate {
    if n == 0 {
        return Estimate { value: f64::NAN, stderr: f64::NAN };
    }
    let p = hits as f64 / n as f64;
    Estimate {
        value: p,
        stderr: (p * (1.0 - p) / n as f64).sqrt(),
    }
}

/// Two-sided Kolmogorov–Smirnov distance between a sample and a CDF.
pub fn ks_distance<F: Fn(f64) -> Result<f64>>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::parameter("samples", "empty sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut worst: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x)?;
        worst = worst.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(worst)
}

/// Empirical CDF of `samples` evaluated on `grid`.
pub fn ecdf(samples: &[f64], grid: &[f64]) -> Vec<f64> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    grid.iter()
        .map(|&x| sorted.partition_point(|&s| s <= x) as f64 / n)
        .collect()
}
