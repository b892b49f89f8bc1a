//! Circulant-embedding (Davies–Harte / Wood–Chan) sampler.

use super::{increment_covariance, HurstParam};
use crate::error::{Error, Result};
use crate::rng::fill_standard_normal;
use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::fmt;
use std::sync::Arc;

/// Relative tolerance for negative circulant eigenvalues. Anything between
/// `-tol * max` and zero is rounding noise and clamped.
pub const EIGENVALUE_TOLERANCE: f64 = 1e-10;

#[derive(Clone)]
pub struct CirculantSampler {
    n: usize,
    embedding: usize,
    // sqrt(lambda_k / M)
    scale: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for CirculantSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CirculantSampler")
            .field("n", &self.n)
            .field("embedding", &self.embedding)
            .finish()
    }
}

impl CirculantSampler {
    pub fn new(n: usize, hurst: HurstParam, horizon: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("fGn needs at least one increment"));
        }
        let half = n.next_power_of_two();
        let m = 2 * half;
        let mut row: Vec<Complex<f64>> = (0..m)
            .map(|k| {
                let lag = if k <= half { k } else { m - k };
                Complex::new(increment_covariance(lag as i64, n, hurst, horizon), 0.0)
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut row);
        let eig: Vec<f64> = row.iter().map(|c| c.re).collect();
        let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -EIGENVALUE_TOLERANCE * max {
            return Err(Error::Embedding {
                min,
                max,
                tol: EIGENVALUE_TOLERANCE,
            });
        }
        let scale = eig
            .iter()
            .map(|&l| (l.max(0.0) / m as f64).sqrt())
            .collect();
        Ok(Self {
            n,
            embedding: m,
            scale,
            fft,
        })
    }

    pub fn steps(&self) -> usize {
        self.n
    }

    /// Number of standard normals consumed per sample.
    pub fn normals_needed(&self) -> usize {
        self.embedding
    }

    /// Maps `embedding` standard normals to one fGn sample.
    ///
    /// Normals `0` and `M/2` drive the two real frequencies; for
    /// `1 <= k < M/2` normals `k` and `M/2 + k` form the real and imaginary
    /// part of frequency `k`, mirrored onto `M - k` so the transform is real.
    pub fn transform(&self, normals: &[f64]) -> Vec<f64> {
        let m = self.embedding;
        let half = m / 2;
        assert_eq!(normals.len(), m, "expected {m} normals");
        let mut w = vec![Complex::new(0.0, 0.0); m];
        w[0] = Complex::new(self.scale[0] * normals[0], 0.0);
        w[half] = Complex::new(self.scale[half] * normals[half], 0.0);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for k in 1..half {
            let c = Complex::new(normals[k], normals[half + k]) * (self.scale[k] * r);
            w[k] = c;
            w[m - k] = c.conj();
        }
        self.fft.process(&mut w);
        w[..self.n].iter().map(|c| c.re).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut z = vec![0.0; self.embedding];
        fill_standard_normal(rng, &mut z);
        self.transform(&z)
    }
}

pub fn sample_fgn_circulant<R: Rng + ?Sized>(
    n: usize,
    hurst: HurstParam,
    horizon: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    Ok(CirculantSampler::new(n, hurst, horizon)?.sample(rng))
}
