use super::fold_paths;
use super::stats::MeanEstimate;
use crate::error::{Error, Result};
use crate::fbm::{increment_covariance, CirculantSampler, HurstParam};
use crate::rng::StreamKey;

/// `V = sum_k F_k [(dB_k)^2 - (T/n)^{2H}]` with `n = increments.len()`.
pub fn weighted_qv(
    weights: &[f64],
    increments: &[f64],
    hurst: HurstParam,
    horizon: f64,
) -> Result<f64> {
    if weights.len() != increments.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} increments",
            weights.len(),
            increments.len()
        )));
    }
    let n = increments.len();
    if n == 0 {
        return Ok(0.0);
    }
    let centre = (horizon / n as f64).powf(2.0 * hurst.value());
    Ok(weights
        .iter()
        .zip(increments)
        .map(|(f, db)| f * (db * db - centre))
        .sum())
}

/// `E[V^2]` for `F = 1`: `2 sum_{k,l} rho(k - l)^2`, grouped by lag.
pub fn qv_second_moment_exact(n: usize, hurst: HurstParam, horizon: f64) -> f64 {
    assert!(n >= 1, "n must be positive");
    let rho0 = increment_covariance(0, n, hurst, horizon);
    let off: f64 = (1..n)
        .map(|lag| (n - lag) as f64 * increment_covariance(lag as i64, n, hurst, horizon).powi(2))
        .sum();
    2.0 * (n as f64 * rho0 * rho0 + 2.0 * off)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QvStat {
    pub n: usize,
    pub hurst: f64,
    /// Statistic of the first path.
    pub value: f64,
    pub exact_second_moment: f64,
    /// Monte Carlo estimate of `E[V^2]`.
    pub second_moment: MeanEstimate,
}

/// Draws `paths` fGn samples and estimates `E[V^2]` for `F = 1`.
pub fn qv_statistic(
    n: usize,
    hurst: HurstParam,
    horizon: f64,
    paths: usize,
    seed: u64,
) -> Result<QvStat> {
    if paths < 2 {
        return Err(Error::domain("at least two Monte Carlo paths are needed"));
    }
    let sampler = CirculantSampler::new(n, hurst, horizon)?;
    let ones = vec![1.0; n];
    let mut values = Vec::with_capacity(paths);
    fold_paths(
        paths,
        |p| {
            let mut rng = StreamKey::new(seed, p, 0).open(0);
            weighted_qv(&ones, &sampler.sample(&mut rng), hurst, horizon)
        },
        |v| values.push(v),
    )?;
    let squares: Vec<f64> = values.iter().map(|v| v * v).collect();
    Ok(QvStat {
        n,
        hurst: hurst.value(),
        value: values[0],
        exact_second_moment: qv_second_moment_exact(n, hurst, horizon),
        second_moment: MeanEstimate::from_samples(&squares),
    })
}
