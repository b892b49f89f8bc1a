//! Fractional Brownian motion: grids, covariances, exact samplers and
//! coupled fine/coarse path bundles.

mod bundle;
mod cholesky;
mod circulant;

pub use bundle::{sample_bundle, BundleSampler, BundleShape, FbmBundle, MAX_FINE_STEPS};
pub use cholesky::{sample_fgn_cholesky, CholeskySampler, CHOLESKY_MAX_STEPS};
pub use circulant::{sample_fgn_circulant, CirculantSampler, EIGENVALUE_TOLERANCE};

use crate::error::{Error, Result};
use rand::Rng;

/// Uniform partition `t_i = i T / n` of `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    horizon: f64,
    steps: usize,
}

impl Grid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::domain(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(Error::domain("grid needs at least one step"));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Grid point `t_i`; the last point is exactly `T`.
    pub fn time(&self, i: usize) -> f64 {
        if i == self.steps {
            self.horizon
        } else {
            i as f64 * self.horizon / self.steps as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.time(i)).collect()
    }

    /// Index of the left endpoint `eta(t)`: largest `i` with `t_i <= t`.
    pub fn left_index(&self, t: f64) -> usize {
        let i = (t / self.step()).floor();
        (i.max(0.0) as usize).min(self.steps)
    }

    /// Index of the right endpoint `eps(t)`: smallest `i` with `t <= t_i`.
    pub fn right_index(&self, t: f64) -> usize {
        let i = (t / self.step()).ceil();
        (i.max(0.0) as usize).min(self.steps)
    }

    /// Grid with `factor` times as many steps on the same horizon.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        Grid::new(self.horizon, self.steps * factor)
    }
}

/// Hurst parameter restricted to `(1/2, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HurstParam(f64);

impl HurstParam {
    pub fn new(h: f64) -> Result<Self> {
        if h > 0.5 && h < 1.0 {
            Ok(Self(h))
        } else {
            Err(Error::InvalidHurst(h))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    /// `alpha_H = H (2H - 1)`, the constant of the kernel `|t - s|^{2H-2}`.
    pub fn alpha(&self) -> f64 {
        self.0 * (2.0 * self.0 - 1.0)
    }
}

impl TryFrom<f64> for HurstParam {
    type Error = Error;

    fn try_from(h: f64) -> Result<Self> {
        HurstParam::new(h)
    }
}

/// `E[B_s B_t] = (t^{2H} + s^{2H} - |t - s|^{2H}) / 2` for one component.
pub fn fbm_covariance(s: f64, t: f64, hurst: HurstParam) -> Result<f64> {
    if s < 0.0 || t < 0.0 || s.is_nan() || t.is_nan() {
        return Err(Error::domain(format!(
            "negative time in covariance ({s}, {t})"
        )));
    }
    let two_h = 2.0 * hurst.value();
    Ok(0.5 * (t.powf(two_h) + s.powf(two_h) - (t - s).abs().powf(two_h)))
}

/// `E[dB_k dB_{k+lag}]` for increments on the uniform grid of `n` steps over `[0, T]`.
pub fn increment_covariance(lag: i64, n: usize, hurst: HurstParam, horizon: f64) -> f64 {
    let two_h = 2.0 * hurst.value();
    let h = horizon / n as f64;
    h.powf(two_h) * unit_increment_covariance(lag.unsigned_abs(), two_h)
}

/// Autocovariance of unit-step fGn at `lag`.
pub(crate) fn unit_increment_covariance(lag: u64, two_h: f64) -> f64 {
    if lag == 0 {
        return 1.0;
    }
    let j = lag as f64;
    0.5 * ((j + 1.0).powf(two_h) + (j - 1.0).powf(two_h) - 2.0 * j.powf(two_h))
}

/// Discrete `beta`-Hölder seminorm over all pairs of grid points.
pub fn holder_seminorm(path: &[f64], grid: &Grid, beta: f64) -> Result<f64> {
    if path.len() != grid.steps() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "path has {} points, grid has {}",
            path.len(),
            grid.steps() + 1
        )));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::domain(format!(
            "Hölder exponent {beta} outside (0, 1)"
        )));
    }
    let h = grid.step();
    // the denominator depends only on the index gap
    let denominators: Vec<f64> = (0..path.len())
        .map(|gap| (gap as f64 * h).powf(beta))
        .collect();
    let mut best = 0.0f64;
    for u in 0..path.len() {
        for v in (u + 1)..path.len() {
            best = best.max((path[v] - path[u]).abs() / denominators[v - u]);
        }
    }
    Ok(best)
}

/// Which exact fGn sampler to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplerMethod {
    /// Cholesky up to [`CHOLESKY_MAX_STEPS`], circulant embedding above.
    #[default]
    Auto,
    Cholesky,
    Circulant,
}

/// Prepared fGn sampler for a fixed `(n, H, T)`.
#[derive(Debug, Clone)]
pub enum FgnSampler {
    Cholesky(CholeskySampler),
    Circulant(CirculantSampler),
}

impl FgnSampler {
    pub fn new(method: SamplerMethod, n: usize, hurst: HurstParam, horizon: f64) -> Result<Self> {
        let use_cholesky = match method {
            SamplerMethod::Auto => n <= CHOLESKY_MAX_STEPS,
            SamplerMethod::Cholesky => true,
            SamplerMethod::Circulant => false,
        };
        if use_cholesky {
            Ok(FgnSampler::Cholesky(CholeskySampler::new(
                n, hurst, horizon,
            )?))
        } else {
            Ok(FgnSampler::Circulant(CirculantSampler::new(
                n, hurst, horizon,
            )?))
        }
    }

    pub fn steps(&self) -> usize {
        match self {
            FgnSampler::Cholesky(s) => s.steps(),
            FgnSampler::Circulant(s) => s.steps(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            FgnSampler::Cholesky(s) => s.sample(rng),
            FgnSampler::Circulant(s) => s.sample(rng),
        }
    }
}

/// Cumulative sum with a leading zero: path values from increments.
pub fn cumulative(increments: &[f64]) -> Vec<f64> {
    let mut values = Vec::with_capacity(increments.len() + 1);
    let mut acc = 0.0;
    values.push(0.0);
    for dx in increments {
        acc += dx;
        values.push(acc);
    }
    values
}

/// Successive differences of path values.
pub fn differences(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| w[1] - w[0]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hurst(h: f64) -> HurstParam {
        HurstParam::new(h).unwrap()
    }

    #[test]
    fn grid_endpoints() {
        let g = Grid::new(1.5, 7).unwrap();
        assert_eq!(g.time(0), 0.0);
        assert_eq!(g.time(7), 1.5);
        let t = g.times();
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g.left_index(0.3), 1);
        assert_eq!(g.right_index(0.3), 2);
        assert!(Grid::new(0.0, 3).is_err());
        assert!(Grid::new(1.0, 0).is_err());
    }

    #[test]
    fn hurst_open_interval() {
        assert!(HurstParam::new(0.5).is_err());
        assert!(HurstParam::new(1.0).is_err());
        assert!(HurstParam::new(f64::NAN).is_err());
        assert!((hurst(0.75).alpha() - 0.375).abs() < 1e-15);
    }

    #[test]
    fn covariance_examples() {
        let h = hurst(0.75);
        assert!((fbm_covariance(1.0, 1.0, h).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(fbm_covariance(0.0, 0.7, h).unwrap(), 0.0);
        assert!((fbm_covariance(1.0, 2.0, h).unwrap() - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!(fbm_covariance(-1.0, 1.0, h).is_err());
    }

    #[test]
    fn increment_covariance_examples() {
        let h = hurst(0.75);
        assert!((increment_covariance(0, 4, h, 1.0) - 0.125).abs() < 1e-15);
        assert!((increment_covariance(1, 1, h, 1.0) - 0.414_213_6).abs() < 1e-7);
        let oracle = 0.5 * (6f64.powf(1.5) - 2.0 * 5f64.powf(1.5) + 4f64.powf(1.5));
        assert!((increment_covariance(5, 1, h, 1.0) - oracle).abs() < 1e-14);
        assert!((oracle - 0.168_129_34).abs() < 1e-8);
    }

    #[test]
    fn increment_covariance_matches_fbm_covariance() {
        // E[(B_{k+1}-B_k)(B_{l+1}-B_l)] from the path covariance
        let h = hurst(0.65);
        let (n, t) = (10, 2.0);
        let grid = Grid::new(t, n).unwrap();
        let r = |a: usize, b: usize| fbm_covariance(grid.time(a), grid.time(b), h).unwrap();
        for k in 0..n {
            for l in 0..n {
                let direct = r(k + 1, l + 1) - r(k + 1, l) - r(k, l + 1) + r(k, l);
                let closed = increment_covariance(l as i64 - k as i64, n, h, t);
                assert!((direct - closed).abs() < 1e-12, "{k} {l}");
            }
        }
    }

    #[test]
    fn near_half_decorrelates() {
        assert!(increment_covariance(1, 1, hurst(0.501), 1.0).abs() < 0.01);
    }

    #[test]
    fn holder_examples() {
        let g = Grid::new(1.0, 10).unwrap();
        assert_eq!(holder_seminorm(&[2.5; 11], &g, 0.4).unwrap(), 0.0);
        let line: Vec<f64> = g.times();
        assert!((holder_seminorm(&line, &g, 0.6).unwrap() - 1.0).abs() < 1e-12);
        let g1 = Grid::new(0.25, 1).unwrap();
        let v = holder_seminorm(&[1.0, 1.3], &g1, 0.5).unwrap();
        assert!((v - 0.3 / 0.5).abs() < 1e-12);
        assert!(holder_seminorm(&[1.0], &g1, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn self_similarity(c in 0.1f64..10.0, lag in -50i64..50, h in 0.51f64..0.99) {
            let hp = hurst(h);
            let base = increment_covariance(lag, 8, hp, 1.0);
            let scaled = increment_covariance(lag, 8, hp, c);
            let expect = c.powf(2.0 * h) * base;
            prop_assert!((scaled - expect).abs() <= 1e-13 * expect.abs().max(1e-300));
        }

        #[test]
        fn stationarity(lag in 0i64..1000, n in 1usize..500, h in 0.51f64..0.99) {
            let hp = hurst(h);
            prop_assert_eq!(increment_covariance(lag, n, hp, 1.0), increment_covariance(-lag, n, hp, 1.0));
        }

        #[test]
        fn covariance_symmetric(s in 0.0f64..5.0, t in 0.0f64..5.0, h in 0.51f64..0.99) {
            let hp = hurst(h);
            prop_assert_eq!(fbm_covariance(s, t, hp).unwrap(), fbm_covariance(t, s, hp).unwrap());
        }
    }
}
