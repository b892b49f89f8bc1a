use super::{cumulative, differences, FgnSampler, Grid, HurstParam, SamplerMethod};
use crate::error::{Error, Result};
use crate::rng::StreamKey;

/// Upper bound on fine-grid steps per component.
pub const MAX_FINE_STEPS: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BundleShape {
    pub n_coarse: usize,
    pub refine: usize,
    pub components: usize,
    pub hurst: HurstParam,
    pub horizon: f64,
}

impl BundleShape {
    pub fn n_fine(&self) -> usize {
        self.n_coarse * self.refine
    }
}

/// `m` independent fBm components on a fine grid, together with their
/// restriction to a coarse grid `refine` times coarser.
#[derive(Debug, Clone)]
pub struct FbmBundle {
    shape: BundleShape,
    fine_grid: Grid,
    coarse_grid: Grid,
    key: StreamKey,
    // fine path values per component, B_0 = 0
    values: Vec<Vec<f64>>,
}

impl FbmBundle {
    /// Builds a bundle from given fine path values (each starting at 0).
    pub fn from_fine_values(
        shape: BundleShape,
        key: StreamKey,
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let (fine_grid, coarse_grid) = grids(&shape)?;
        if values.len() != shape.components
            || values
                .iter()
                .any(|v| v.len() != shape.n_fine() + 1 || v[0] != 0.0)
        {
            return Err(Error::DimensionMismatch(
                "bundle values must have one zero-started path per component".into(),
            ));
        }
        Ok(Self {
            shape,
            fine_grid,
            coarse_grid,
            key,
            values,
        })
    }

    pub fn shape(&self) -> &BundleShape {
        &self.shape
    }

    pub fn hurst(&self) -> HurstParam {
        self.shape.hurst
    }

    pub fn components(&self) -> usize {
        self.shape.components
    }

    pub fn refine(&self) -> usize {
        self.shape.refine
    }

    pub fn fine_grid(&self) -> &Grid {
        &self.fine_grid
    }

    pub fn coarse_grid(&self) -> &Grid {
        &self.coarse_grid
    }

    /// Stream key of component 0; component `j` uses `key.with_component(j)`.
    pub fn key(&self) -> StreamKey {
        self.key
    }

    pub fn fine_values(&self, component: usize) -> &[f64] {
        &self.values[component]
    }

    pub fn fine_increments(&self, component: usize) -> Vec<f64> {
        differences(&self.values[component])
    }

    pub fn coarse_values(&self, component: usize) -> Vec<f64> {
        self.values_on(component, self.shape.n_coarse)
            .expect("coarse grid divides the fine grid")
    }

    pub fn coarse_increments(&self, component: usize) -> Vec<f64> {
        self.increments_on(component, self.shape.n_coarse)
            .expect("coarse grid divides the fine grid")
    }

    /// Path values restricted to the grid of `steps` steps.
    pub fn values_on(&self, component: usize, steps: usize) -> Result<Vec<f64>> {
        let stride = self.stride(steps)?;
        Ok(self.values[component]
            .iter()
            .step_by(stride)
            .copied()
            .collect())
    }

    /// Increments on the grid of `steps` steps, each the left-to-right sum of
    /// the fine increments it covers.
    pub fn increments_on(&self, component: usize, steps: usize) -> Result<Vec<f64>> {
        let stride = self.stride(steps)?;
        Ok(self
            .fine_increments(component)
            .chunks_exact(stride)
            .map(|block| block[1..].iter().fold(block[0], |acc, x| acc + x))
            .collect())
    }

    /// Increments of every component on the grid of `steps` steps.
    pub fn noise_on(&self, steps: usize) -> Result<Vec<Vec<f64>>> {
        (0..self.shape.components)
            .map(|j| self.increments_on(j, steps))
            .collect()
    }

    fn stride(&self, steps: usize) -> Result<usize> {
        let n_fine = self.shape.n_fine();
        if steps == 0 || !n_fine.is_multiple_of(steps) {
            return Err(Error::DimensionMismatch(format!(
                "{steps} steps do not divide the fine grid of {n_fine}"
            )));
        }
        Ok(n_fine / steps)
    }
}

fn grids(shape: &BundleShape) -> Result<(Grid, Grid)> {
    if shape.refine == 0 || shape.components == 0 {
        return Err(Error::domain(
            "refine factor and component count must be positive",
        ));
    }
    let n_fine = shape
        .n_coarse
        .checked_mul(shape.refine)
        .filter(|&n| n <= MAX_FINE_STEPS)
        .ok_or(Error::TooLarge {
            what: "fine grid size",
            requested: shape.n_coarse.saturating_mul(shape.refine),
            max: MAX_FINE_STEPS,
        })?;
    Ok((
        Grid::new(shape.horizon, n_fine)?,
        Grid::new(shape.horizon, shape.n_coarse)?,
    ))
}

/// Reusable bundle generator: the fGn factorization is built once and shared
/// across paths.
#[derive(Debug, Clone)]
pub struct BundleSampler {
    shape: BundleShape,
    sampler: FgnSampler,
}

impl BundleSampler {
    pub fn new(shape: BundleShape, method: SamplerMethod) -> Result<Self> {
        let (fine, _) = grids(&shape)?;
        let sampler = FgnSampler::new(method, fine.steps(), shape.hurst, shape.horizon)?;
        Ok(Self { shape, sampler })
    }

    pub fn shape(&self) -> &BundleShape {
        &self.shape
    }

    /// Component `j` is drawn from stream `(seed, path_index, j)`, block 0.
    pub fn sample(&self, seed: u64, path_index: u64) -> FbmBundle {
        let key = StreamKey::new(seed, path_index, 0);
        let values = (0..self.shape.components)
            .map(|j| {
                let mut rng = key.with_component(j as u32).open(0);
                cumulative(&self.sampler.sample(&mut rng))
            })
            .collect();
        FbmBundle::from_fine_values(self.shape, key, values).expect("shape validated")
    }
}

pub fn sample_bundle(
    n_coarse: usize,
    refine: usize,
    components: usize,
    hurst: HurstParam,
    horizon: f64,
    seed: u64,
    path_index: u64,
) -> Result<FbmBundle> {
    let shape = BundleShape {
        n_coarse,
        refine,
        components,
        hurst,
        horizon,
    };
    Ok(BundleSampler::new(shape, SamplerMethod::Auto)?.sample(seed, path_index))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h() -> HurstParam {
        HurstParam::new(0.7).unwrap()
    }

    #[test]
    fn unit_refinement_is_identity() {
        let b = sample_bundle(16, 1, 2, h(), 1.0, 5, 0).unwrap();
        for j in 0..2 {
            assert_eq!(b.coarse_values(j), b.fine_values(j));
            assert_eq!(b.coarse_increments(j), b.fine_increments(j));
        }
    }

    #[test]
    fn restriction_and_block_sums() {
        let r = 4;
        let b = sample_bundle(8, r, 2, h(), 2.0, 5, 3).unwrap();
        for j in 0..2 {
            let fine = b.fine_values(j);
            assert_eq!(fine[0], 0.0);
            let coarse = b.coarse_values(j);
            for (k, v) in coarse.iter().enumerate() {
                assert_eq!(v.to_bits(), fine[k * r].to_bits());
            }
            let finc = b.fine_increments(j);
            let cinc = b.coarse_increments(j);
            for k in 0..8 {
                let mut s = finc[k * r];
                for i in 1..r {
                    s += finc[k * r + i];
                }
                assert_eq!(s.to_bits(), cinc[k].to_bits());
                // same quantity as the coarse value difference up to rounding
                assert!((s - (coarse[k + 1] - coarse[k])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn order_independent_paths() {
        let shape = BundleShape {
            n_coarse: 32,
            refine: 2,
            components: 3,
            hurst: h(),
            horizon: 1.0,
        };
        let s = BundleSampler::new(shape, SamplerMethod::Auto).unwrap();
        let late = s.sample(9, 17);
        for p in 0..5 {
            s.sample(9, p);
        }
        let again = s.sample(9, 17);
        for j in 0..3 {
            assert_eq!(late.fine_values(j), again.fine_values(j));
        }
        assert_ne!(late.fine_values(0), late.fine_values(1));
    }

    #[test]
    fn fine_size_limit() {
        assert!(matches!(
            sample_bundle(MAX_FINE_STEPS, 2, 1, h(), 1.0, 0, 0),
            Err(Error::TooLarge { .. })
        ));
        assert!(sample_bundle(4, 0, 1, h(), 1.0, 0, 0).is_err());
    }

    #[test]
    fn bad_restriction_level() {
        let b = sample_bundle(6, 2, 1, h(), 1.0, 0, 0).unwrap();
        assert!(b.values_on(0, 5).is_err());
        assert_eq!(b.values_on(0, 3).unwrap().len(), 4);
    }
}
