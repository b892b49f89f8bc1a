use super::{increment_covariance, HurstParam};
use crate::error::{Error, Result};
use crate::rng::fill_standard_normal;
use rand::Rng;

/// Largest `n` accepted by the O(n^2)-memory Cholesky sampler.
pub const CHOLESKY_MAX_STEPS: usize = 2048;

/// Exact fGn sampler through the lower Cholesky factor of the Toeplitz
/// increment covariance.
#[derive(Debug, Clone)]
pub struct CholeskySampler {
    n: usize,
    // packed lower triangle, row i occupies [i(i+1)/2, i(i+1)/2 + i]
    factor: Vec<f64>,
}

impl CholeskySampler {
    pub fn new(n: usize, hurst: HurstParam, horizon: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("fGn needs at least one increment"));
        }
        if n > CHOLESKY_MAX_STEPS {
            return Err(Error::TooLarge {
                what: "Cholesky sampler size",
                requested: n,
                max: CHOLESKY_MAX_STEPS,
            });
        }
        let gamma: Vec<f64> = (0..n)
            .map(|lag| increment_covariance(lag as i64, n, hurst, horizon))
            .collect();
        let mut factor = vec![0.0; n * (n + 1) / 2];
        let row = |i: usize| i * (i + 1) / 2;
        for i in 0..n {
            for j in 0..=i {
                let mut sum = gamma[i - j];
                let (ri, rj) = (row(i), row(j));
                for k in 0..j {
                    sum -= factor[ri + k] * factor[rj + k];
                }
                if i == j {
                    if !(sum > 0.0) {
                        return Err(Error::Factorization { row: i, pivot: sum });
                    }
                    factor[ri + i] = sum.sqrt();
                } else {
                    factor[ri + j] = sum / factor[rj + j];
                }
            }
        }
        Ok(Self { n, factor })
    }

    pub fn steps(&self) -> usize {
        self.n
    }

    /// Maps `n` standard normals to one fGn sample.
    pub fn transform(&self, normals: &[f64]) -> Vec<f64> {
        assert_eq!(normals.len(), self.n, "expected {} normals", self.n);
        (0..self.n)
            .map(|i| {
                let start = i * (i + 1) / 2;
                self.factor[start..=start + i]
                    .iter()
                    .zip(normals)
                    .map(|(l, z)| l * z)
                    .sum()
            })
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut z = vec![0.0; self.n];
        fill_standard_normal(rng, &mut z);
        self.transform(&z)
    }
}

pub fn sample_fgn_cholesky<R: Rng + ?Sized>(
    n: usize,
    hurst: HurstParam,
    horizon: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    Ok(CholeskySampler::new(n, hurst, horizon)?.sample(rng))
}
