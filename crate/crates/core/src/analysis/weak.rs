use super::rate::RateReport;
use super::stats::MeanEstimate;
use super::{fit_paths_report, fold_paths, LadderSpec};
use crate::error::{Error, Result};
use crate::fbm::{Grid, HurstParam};
use crate::model::{doss_flow, VectorFieldModel, DEFAULT_ODE_TOL};
use crate::solver::{fine_reference, solve, SchemeKind};
use std::str::FromStr;

const WEAK_RATE_CB_ORDER: u32 = 4;

/// Test functions `f: R^d -> R`, evaluated on the first coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payoff {
    Identity,
    Square,
    /// `tanh(x_1)`.
    BoundedSmooth,
    Constant(f64),
}

impl Payoff {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Payoff::Identity => x[0],
            Payoff::Square => x[0] * x[0],
            Payoff::BoundedSmooth => x[0].tanh(),
            Payoff::Constant(c) => c,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Payoff::Identity => "identity".into(),
            Payoff::Square => "square".into(),
            Payoff::BoundedSmooth => "bounded-smooth".into(),
            Payoff::Constant(c) => format!("constant({c})"),
        }
    }
}

impl FromStr for Payoff {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Payoff::Identity),
            "square" => Ok(Payoff::Square),
            "bounded-smooth" => Ok(Payoff::BoundedSmooth),
            other => Err(Error::domain(format!(
                "unknown payoff '{other}' (expected identity, square or bounded-smooth)"
            ))),
        }
    }
}

/// Closed-form `E[f(X_T)]` where one is known: geometric fBm
/// `X_T = X_0 exp(B_T)` with `B_T ~ N(0, T^{2H})`, and constant payoffs.
pub fn exact_mean(
    model: &VectorFieldModel,
    payoff: Payoff,
    hurst: HurstParam,
    horizon: f64,
) -> Option<f64> {
    if let Payoff::Constant(c) = payoff {
        return Some(c);
    }
    if model.name() != "gfbm1d" || !model.supports_doss() {
        return None;
    }
    let x0 = model.initial()[0];
    let var = horizon.powf(2.0 * hurst.value());
    match payoff {
        Payoff::Identity => Some(x0 * (0.5 * var).exp()),
        Payoff::Square => Some(x0 * x0 * (2.0 * var).exp()),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakReport {
    /// `|E f(X_T) - E f(X^n_T)|` from the coupled estimator, with its fit.
    pub report: RateReport,
    /// Signed coupled bias `mean(f(X_T) - f(X^n_T))` per level.
    pub bias: Vec<MeanEstimate>,
    pub exact_mean: Option<f64>,
    /// `exact - mean f(X^n_T)` per level, when the exact mean is known.
    pub absolute_bias: Option<Vec<MeanEstimate>>,
}

/// Weak error of `scheme` at time `T` on the ladder. The bias is estimated
/// by averaging `f(reference) - f(X^n)` on shared noise.
pub fn weak_error_experiment(
    model: &VectorFieldModel,
    scheme: SchemeKind,
    payoff: Payoff,
    spec: &LadderSpec,
) -> Result<WeakReport> {
    spec.validate()?;
    let doss = spec.uses_doss(model)?;
    let sampler = spec.bundle_sampler(model)?;
    let grids: Vec<Grid> = spec
        .n_ladder
        .iter()
        .map(|&n| Grid::new(spec.horizon, n))
        .collect::<Result<_>>()?;
    let levels = grids.len();
    let n_max = spec.n_max();

    let mut diffs: Vec<Vec<f64>> = vec![Vec::with_capacity(spec.paths); levels];
    let mut approx: Vec<Vec<f64>> = vec![Vec::with_capacity(spec.paths); levels];
    let diverged = fold_paths(
        spec.paths,
        |p| {
            let bundle = sampler.sample(spec.seed, p);
            let f_ref = if doss {
                let b_t = bundle.coarse_values(0)[n_max];
                let x_t = doss_flow(model, model.initial()[0], b_t, DEFAULT_ODE_TOL)?;
                payoff.eval(&[x_t])
            } else {
                payoff.eval(fine_reference(model, &bundle, spec.hurst)?.terminal())
            };
            grids
                .iter()
                .map(|g| {
                    let noise = bundle.noise_on(g.steps())?;
                    let x = solve(scheme, model, g, &noise, spec.hurst)?;
                    let f_n = payoff.eval(x.terminal());
                    Ok((f_ref - f_n, f_n))
                })
                .collect::<Result<Vec<_>>>()
        },
        |row| {
            for (l, (d, f)) in row.into_iter().enumerate() {
                diffs[l].push(d);
                approx[l].push(f);
            }
        },
    )?;

    let bias: Vec<MeanEstimate> = diffs
        .iter()
        .map(|d| MeanEstimate::from_samples(d))
        .collect();
    let exact = exact_mean(model, payoff, spec.hurst, spec.horizon);
    let absolute_bias = exact.map(|m| {
        approx
            .iter()
            .map(|f| {
                let e = MeanEstimate::from_samples(f);
                MeanEstimate {
                    mean: m - e.mean,
                    ..e
                }
            })
            .collect()
    });
    let used = diffs[0].len();
    let report = fit_paths_report(
        model,
        scheme.name(),
        spec,
        diverged,
        used,
        bias.iter().map(|b| b.mean.abs()).collect(),
        bias.iter().map(|b| b.stderr).collect(),
        scheme.weak_slope(spec.hurst),
        model
            .hypothesis_warning(WEAK_RATE_CB_ORDER)
            .into_iter()
            .collect(),
    );
    Ok(WeakReport {
        report,
        bias,
        exact_mean: exact,
        absolute_bias,
    })
}
