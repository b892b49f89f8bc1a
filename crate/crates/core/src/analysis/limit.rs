use super::fold_paths;
use super::stats::quantile;
use crate::error::{Error, Result};
use crate::fbm::{BundleSampler, BundleShape, Grid, HurstParam, SamplerMethod};
use crate::model::{correction_field, doss_flow, Trajectory, VectorFieldModel, DEFAULT_ODE_TOL};
use crate::solver::{euler_classical, fine_reference, jacobian_flow, JacobianFlow};

/// Guard in the relative deviation `|e - L| / (|L| + eps)`.
pub const DEVIATION_EPS: f64 = 1e-8;

/// `(T^{2H-1}/2) sum_j Lambda_T int_0^T Lambda_s^{-1} (grad sigma^j sigma^j)(X_s) ds`,
/// with the integral taken by the trapezoid rule on the flow's grid.
pub fn limit_functional(
    flow: &JacobianFlow,
    x: &Trajectory,
    model: &VectorFieldModel,
    hurst: HurstParam,
) -> Result<Vec<f64>> {
    functional_with_stride(flow, x, model, hurst, 1)
}

/// Same functional using only every `stride`-th grid point as quadrature nodes.
pub(crate) fn functional_with_stride(
    flow: &JacobianFlow,
    x: &Trajectory,
    model: &VectorFieldModel,
    hurst: HurstParam,
    stride: usize,
) -> Result<Vec<f64>> {
    let grid = flow.grid();
    if grid != x.grid() || x.dim() != model.dim() || flow.dim() != model.dim() {
        return Err(Error::DimensionMismatch(
            "flow, trajectory and model must share grid and dimension".into(),
        ));
    }
    let n = grid.steps();
    if stride == 0 || !n.is_multiple_of(stride) {
        return Err(Error::domain(format!(
            "stride {stride} does not divide {n}"
        )));
    }
    let d = model.dim();
    let h = grid.step() * stride as f64;
    let mut acc = vec![0.0; d];
    for k in (0..=n).step_by(stride) {
        let w = if k == 0 || k == n { 0.5 * h } else { h };
        let inv = flow.inverse(k);
        for j in 0..model.drivers() {
            let c = correction_field(model, x.state(k), j);
            for (i, a) in acc.iter_mut().enumerate() {
                *a += w * (0..d).map(|l| inv[i * d + l] * c[l]).sum::<f64>();
            }
        }
    }
    let lam_t = flow.matrix(n);
    let scale = 0.5 * grid.horizon().powf(2.0 * hurst.value() - 1.0);
    Ok((0..d)
        .map(|i| scale * (0..d).map(|l| lam_t[i * d + l] * acc[l]).sum::<f64>())
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitSummary {
    pub n: usize,
    pub paths: usize,
    pub diverged: usize,
    /// Mean of `|n^{2H-1}(X_T - X^n_T) - L| / (|L| + eps)` over paths.
    pub mean_deviation: f64,
    pub p95_deviation: f64,
    /// Path averages of the rescaled error and of the limit, first coordinate.
    pub mean_rescaled_error: f64,
    pub mean_limit: f64,
}

impl LimitSummary {
    pub fn summary(&self) -> String {
        format!(
            "n={} mean_deviation={:.6} p95_deviation={:.6}",
            self.n, self.mean_deviation, self.p95_deviation
        )
    }
}

/// Compares the rescaled classical Euler error at `T` with the limit
/// functional on `paths` coupled bundles with `refine` fine steps per step.
pub fn euler_limit_experiment(
    model: &VectorFieldModel,
    hurst: HurstParam,
    horizon: f64,
    n: usize,
    paths: usize,
    refine: usize,
    seed: u64,
) -> Result<LimitSummary> {
    if paths < 2 {
        return Err(Error::domain("at least two Monte Carlo paths are needed"));
    }
    let sampler = BundleSampler::new(
        BundleShape {
            n_coarse: n,
            refine,
            components: model.drivers(),
            hurst,
            horizon,
        },
        SamplerMethod::Circulant,
    )?;
    let grid = Grid::new(horizon, n)?;
    let rescale = (n as f64).powf(2.0 * hurst.value() - 1.0);
    let d = model.dim();

    let mut deviations = Vec::with_capacity(paths);
    let mut errors = Vec::with_capacity(paths);
    let mut limits = Vec::with_capacity(paths);
    let diverged = fold_paths(
        paths,
        |p| {
            let bundle = sampler.sample(seed, p);
            let fine = fine_reference(model, &bundle, hurst)?;
            let fine_noise = bundle.noise_on(bundle.fine_grid().steps())?;
            let flow = jacobian_flow(model, &fine, &fine_noise)?;
            let limit = limit_functional(&flow, &fine, model, hurst)?;
            let x_ref = if model.supports_doss() {
                let b_t = bundle.fine_values(0)[bundle.fine_grid().steps()];
                vec![doss_flow(model, model.initial()[0], b_t, DEFAULT_ODE_TOL)?]
            } else {
                fine.terminal().to_vec()
            };
            let approx = euler_classical(model, &grid, &bundle.noise_on(n)?)?;
            let err: Vec<f64> = (0..d)
                .map(|i| rescale * (x_ref[i] - approx.terminal()[i]))
                .collect();
            let gap = err
                .iter()
                .zip(&limit)
                .map(|(e, l)| (e - l).powi(2))
                .sum::<f64>()
                .sqrt();
            let size = limit.iter().map(|l| l * l).sum::<f64>().sqrt();
            Ok((gap / (size + DEVIATION_EPS), err[0], limit[0]))
        },
        |(dev, err, lim)| {
            deviations.push(dev);
            errors.push(err);
            limits.push(lim);
        },
    )?;
    let m = deviations.len() as f64;
    Ok(LimitSummary {
        n,
        paths,
        diverged,
        mean_deviation: deviations.iter().sum::<f64>() / m,
        p95_deviation: quantile(&deviations, 0.95),
        mean_rescaled_error: errors.iter().sum::<f64>() / m,
        mean_limit: limits.iter().sum::<f64>() / m,
    })
}
