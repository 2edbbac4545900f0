use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Smallest sample accepted by [`ks_normality`].
pub const KS_MIN_SAMPLES: usize = 8;
const KOLMOGOROV_TERMS: i32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov–Smirnov test against `N(0, 1)`.
///
/// The p-value is the asymptotic Kolmogorov tail
/// `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}` (first 100 terms) at Stephens'
/// small-sample argument `λ = (√n + 0.12 + 0.11/√n) D`.
pub fn ks_normality(samples: &[f64]) -> Result<KsResult> {
    if samples.len() < KS_MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "KS test needs at least {KS_MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::invalid("KS sample contains NaN"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let normal = Normal::standard();
    let n = sorted.len() as f64;
    let statistic = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * statistic;
    Ok(KsResult {
        statistic,
        p_value: kolmogorov_tail(lambda),
    })
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    // below 0.2 the series has not converged in 100 terms; Q is 1 to
    // double precision there
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=KOLMOGOROV_TERMS {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Pearson correlation matrix of the columns of `rows`.
pub fn correlation_matrix(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = rows.first().map_or(0, Vec::len);
    let cols: Vec<Vec<f64>> = (0..k).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let centered: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| {
            let m = mean(c);
            c.iter().map(|x| x - m).collect()
        })
        .collect();
    let norms: Vec<f64> = centered.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mut out = vec![vec![0.0; k]; k];
    for i in 0..k {
        out[i][i] = 1.0;
        for j in i + 1..k {
            let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            let r = dot / (norms[i] * norms[j]);
            out[i][j] = r;
            out[j][i] = r;
        }
    }
    out
}
