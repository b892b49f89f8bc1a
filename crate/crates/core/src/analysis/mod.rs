//! Monte Carlo experiments and deterministic oracles for the convergence
//! results: strong and weak rates, the classical-scheme limit functional, and
//! the second moments of weighted quadratic variations and mixed covariations.

mod limit;
mod mixed;
pub mod quadrature;
mod qv;
mod rate;
pub mod stats;
mod strong;
mod weak;

pub use limit::{euler_limit_experiment, limit_functional, LimitSummary};
pub use mixed::{
    mixed_covariation_from_paths, mixed_covariation_stat, mixed_second_moment_quadrature,
    MixedSampler, MIN_SUBGRID,
};
pub use qv::{qv_second_moment_exact, qv_statistic, weighted_qv, QvStat};
pub use rate::{fit_rate, RateFit, RateReport};
pub use strong::{strong_error_experiment, strong_error_experiments};
pub use weak::{exact_mean, weak_error_experiment, Payoff, WeakReport};

use crate::error::{Error, Result};
use crate::fbm::{BundleSampler, BundleShape, HurstParam, SamplerMethod};
use crate::model::VectorFieldModel;
use crate::solver::ReferenceOracle;
use rayon::prelude::*;

/// Largest fraction of diverged paths an experiment tolerates.
pub const DIVERGENCE_BUDGET: f64 = 1e-3;

/// Paths are evaluated in parallel chunks of this size and folded in index order.
const PATH_CHUNK: usize = 64;

/// Common parameters of the ladder experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderSpec {
    pub hurst: HurstParam,
    pub horizon: f64,
    /// Strictly increasing; every entry divides the largest one.
    pub n_ladder: Vec<usize>,
    pub paths: usize,
    pub seed: u64,
    /// Fine-grid factor for the fine-grid reference.
    pub refine: usize,
    pub oracle: ReferenceOracle,
}

impl LadderSpec {
    pub fn new(hurst: HurstParam, n_ladder: Vec<usize>, paths: usize, seed: u64) -> Self {
        Self {
            hurst,
            horizon: 1.0,
            n_ladder,
            paths,
            seed,
            refine: 64,
            oracle: ReferenceOracle::Auto,
        }
    }

    pub fn n_max(&self) -> usize {
        *self.n_ladder.last().expect("validated ladder")
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.n_ladder.is_empty() {
            return Err(Error::domain("empty n ladder"));
        }
        if self.n_ladder.windows(2).any(|w| w[1] <= w[0]) || self.n_ladder[0] == 0 {
            return Err(Error::domain(
                "n ladder must be positive and strictly increasing",
            ));
        }
        let top = self.n_max();
        if let Some(n) = self.n_ladder.iter().find(|&&n| !top.is_multiple_of(n)) {
            return Err(Error::domain(format!(
                "ladder entry {n} does not divide {top}"
            )));
        }
        if self.paths < 2 {
            return Err(Error::domain("at least two Monte Carlo paths are needed"));
        }
        if self.refine == 0 {
            return Err(Error::domain("refine factor must be positive"));
        }
        Ok(())
    }

    pub(crate) fn uses_doss(&self, model: &VectorFieldModel) -> Result<bool> {
        match self.oracle {
            ReferenceOracle::Auto => Ok(model.supports_doss()),
            ReferenceOracle::FineModified => Ok(false),
            ReferenceOracle::Doss if model.supports_doss() => Ok(true),
            ReferenceOracle::Doss => Err(Error::UnsupportedModel(format!(
                "Doss oracle requested for '{}'",
                model.name()
            ))),
        }
    }

    /// One bundle per path on the top ladder level. The Doss oracle only
    /// reads grid values, so no fine grid is drawn for it.
    pub(crate) fn bundle_sampler(&self, model: &VectorFieldModel) -> Result<BundleSampler> {
        let refine = if self.uses_doss(model)? {
            1
        } else {
            self.refine
        };
        BundleSampler::new(
            BundleShape {
                n_coarse: self.n_max(),
                refine,
                components: model.drivers(),
                hurst: self.hurst,
                horizon: self.horizon,
            },
            SamplerMethod::Circulant,
        )
    }
}

/// Evaluates `work` for every path index, in parallel, and hands the results
/// to `fold` in path order. Diverged paths are counted and skipped; the
/// count is returned.
pub(crate) fn fold_paths<T, W, F>(paths: usize, work: W, mut fold: F) -> Result<usize>
where
    T: Send,
    W: Fn(u64) -> Result<T> + Sync,
    F: FnMut(T),
{
    let mut diverged = 0;
    for start in (0..paths).step_by(PATH_CHUNK) {
        let end = (start + PATH_CHUNK).min(paths);
        let chunk: Vec<Result<T>> = (start..end)
            .into_par_iter()
            .map(|p| work(p as u64))
            .collect();
        for r in chunk {
            match r {
                Ok(v) => fold(v),
                Err(Error::Diverged { .. }) => diverged += 1,
                Err(e) => return Err(e),
            }
        }
    }
    if diverged as f64 > DIVERGENCE_BUDGET * paths as f64 {
        return Err(Error::DivergenceBudget {
            diverged,
            total: paths,
        });
    }
    Ok(diverged)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn fit_paths_report(
    model: &VectorFieldModel,
    scheme: &str,
    spec: &LadderSpec,
    diverged: usize,
    used: usize,
    errors: Vec<f64>,
    std_errors: Vec<f64>,
    expected_slope: f64,
    warnings: Vec<String>,
) -> RateReport {
    let points: Vec<(f64, f64)> = spec
        .n_ladder
        .iter()
        .zip(&errors)
        .map(|(&n, &e)| (n as f64, e))
        .collect();
    let fit = if points.len() >= 2 && errors.iter().all(|&e| e > 0.0) {
        fit_rate(&points).unwrap_or_else(|_| RateFit::undefined())
    } else {
        RateFit::undefined()
    };
    RateReport {
        model: model.name().to_string(),
        scheme: scheme.to_string(),
        hurst: spec.hurst.value(),
        seed: spec.seed,
        paths: spec.paths,
        diverged,
        n_values: spec.n_ladder.clone(),
        used_paths: vec![used; errors.len()],
        errors,
        std_errors,
        fit,
        expected_slope,
        warnings,
    }
}
