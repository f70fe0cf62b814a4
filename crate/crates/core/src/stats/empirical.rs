use super::{AccuracySummary, TickRecord};
use crate::error::{Error, Result};

/// Sample estimate of the `k`-th tick accuracy with delta-method errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalAccuracy {
    /// `mass` is the fraction of records that reached tick `k`.
    pub summary: AccuracySummary,
    pub se_mean: f64,
    pub se_variance: f64,
    pub se_r: f64,
    pub usable: usize,
    /// Records without a `k`-th tick.
    pub excluded: usize,
    /// Of those, how many carry the truncated flag.
    pub excluded_truncated: usize,
}

/// Mean, unbiased variance and `R = mean²/variance` of the `k`-th tick time
/// over records that contain it.
pub fn empirical_accuracy(records: &[TickRecord], k: usize) -> Result<EmpiricalAccuracy> {
    if k == 0 {
        return Err(Error::Domain("tick index starts at 1".into()));
    }
    let times: Vec<f64> = records
        .iter()
        .filter_map(|r| r.tick_times.get(k - 1).copied())
        .collect();
    let excluded = records.len() - times.len();
    let excluded_truncated = records
        .iter()
        .filter(|r| r.tick_times.len() < k && r.truncated)
        .count();
    let n = times.len();
    if n < 2 {
        return Err(Error::InsufficientData { usable: n });
    }
    let nf = n as f64;
    let mean = times.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for t in &times {
        let x = t - mean;
        let x2 = x * x;
        m2 += x2;
        m3 += x2 * x;
        m4 += x2 * x2;
    }
    let variance = m2 / (nf - 1.0);
    if !(variance > 0.0) {
        return Err(Error::Degenerate(format!("all {n} samples of tick {k} coincide")));
    }
    let (mu3, mu4, pop_var) = (m3 / nf, m4 / nf, m2 / nf);

    // Delta method for R = μ²/σ²: gradient (2μ/σ², −μ²/σ⁴) against the
    // joint covariance of the sample mean and sample variance.
    let g_mean = 2.0 * mean / variance;
    let g_var = -mean * mean / (variance * variance);
    let var_of_var = (mu4 - pop_var * pop_var).max(0.0);
    let r_var = (g_mean * g_mean * pop_var + g_var * g_var * var_of_var + 2.0 * g_mean * g_var * mu3) / nf;

    Ok(EmpiricalAccuracy {
        summary: AccuracySummary {
            k,
            mean,
            variance,
            r_value: mean * mean / variance,
            mass: nf / records.len() as f64,
        },
        se_mean: (variance / nf).sqrt(),
        se_variance: (var_of_var / nf).sqrt(),
        se_r: r_var.max(0.0).sqrt(),
        usable: n,
        excluded,
        excluded_truncated,
    })
}
