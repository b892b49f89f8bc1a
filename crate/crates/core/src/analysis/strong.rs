use super::{fit_paths_report, fold_paths, LadderSpec};
use crate::error::Result;
use crate::fbm::Grid;
use crate::model::VectorFieldModel;
use crate::solver::{reference_solution, solve, SchemeKind};

use super::rate::RateReport;

/// Smoothness order assumed by the strong-rate result.
const STRONG_RATE_CB_ORDER: u32 = 6;

/// Strong error `max_i (E|X^n_{t_i} - X_{t_i}|^2)^{1/2}` for each ladder level
/// and each scheme, all schemes sharing the same noise and reference paths.
///
/// Every path draws one bundle on the top level; lower levels use block sums
/// of its increments, so the whole ladder is coupled.
pub fn strong_error_experiments(
    model: &VectorFieldModel,
    schemes: &[SchemeKind],
    spec: &LadderSpec,
) -> Result<Vec<RateReport>> {
    spec.validate()?;
    let sampler = spec.bundle_sampler(model)?;
    let n_max = spec.n_max();
    let levels = spec.n_ladder.len();
    let grids: Vec<Grid> = spec
        .n_ladder
        .iter()
        .map(|&n| Grid::new(spec.horizon, n))
        .collect::<Result<_>>()?;

    // [scheme][level][grid point]
    let zero = || -> Vec<Vec<Vec<f64>>> {
        schemes
            .iter()
            .map(|_| spec.n_ladder.iter().map(|&n| vec![0.0; n + 1]).collect())
            .collect()
    };
    let mut sum_sq = zero();
    let mut sum_sq2 = zero();
    let mut used = 0usize;

    let diverged = fold_paths(
        spec.paths,
        |p| {
            let bundle = sampler.sample(spec.seed, p);
            let reference = reference_solution(model, &bundle, spec.hurst, spec.oracle)?;
            let mut out = zero();
            for (s, &kind) in schemes.iter().enumerate() {
                for (l, grid) in grids.iter().enumerate() {
                    let n = grid.steps();
                    let stride = n_max / n;
                    let noise = bundle.noise_on(n)?;
                    let approx = solve(kind, model, grid, &noise, spec.hurst)?;
                    for i in 0..=n {
                        out[s][l][i] = approx
                            .state(i)
                            .iter()
                            .zip(reference.state(i * stride))
                            .map(|(a, b)| (a - b).powi(2))
                            .sum();
                    }
                }
            }
            Ok(out)
        },
        |sq| {
            used += 1;
            for s in 0..schemes.len() {
                for l in 0..levels {
                    for (i, e) in sq[s][l].iter().enumerate() {
                        sum_sq[s][l][i] += e;
                        sum_sq2[s][l][i] += e * e;
                    }
                }
            }
        },
    )?;

    let warnings: Vec<String> = model
        .hypothesis_warning(STRONG_RATE_CB_ORDER)
        .into_iter()
        .collect();
    Ok(schemes
        .iter()
        .enumerate()
        .map(|(s, &kind)| {
            let mut errors = Vec::with_capacity(levels);
            let mut std_errors = Vec::with_capacity(levels);
            for l in 0..levels {
                let (err, se) = sup_rms(&sum_sq[s][l], &sum_sq2[s][l], used);
                errors.push(err);
                std_errors.push(se);
            }
            fit_paths_report(
                model,
                kind.name(),
                spec,
                diverged,
                used,
                errors,
                std_errors,
                kind.strong_slope(spec.hurst),
                warnings.clone(),
            )
        })
        .collect())
}

pub fn strong_error_experiment(
    model: &VectorFieldModel,
    scheme: SchemeKind,
    spec: &LadderSpec,
) -> Result<RateReport> {
    Ok(strong_error_experiments(model, &[scheme], spec)?.remove(0))
}

/// Largest RMS over grid points, with a delta-method standard error at the
/// maximizing point.
fn sup_rms(sum_sq: &[f64], sum_sq2: &[f64], count: usize) -> (f64, f64) {
    let m = count as f64;
    let (i, mean_sq) =
        sum_sq
            .iter()
            .map(|s| s / m)
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            });
    let rms = mean_sq.sqrt();
    let var_sq = (sum_sq2[i] / m - mean_sq * mean_sq).max(0.0) * m / (m - 1.0);
    let se = if rms > 0.0 {
        (var_sq / m).sqrt() / (2.0 * rms)
    } else {
        0.0
    };
    (rms, se)
}
