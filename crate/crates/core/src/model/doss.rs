//! Pathwise exact solution of one-dimensional driftless equations.
//!
//! For `dX = sigma(X) dB` with `d = m = 1` the solution is `X_t = phi(X_0, B_t)`
//! where `phi(x, .)` solves `d phi / db = sigma(phi)`, `phi(x, 0) = x`.

use super::{ode, Provenance, Trajectory, VectorFieldModel};
use crate::error::{Error, Result};
use crate::fbm::Grid;

pub const DEFAULT_ODE_TOL: f64 = 1e-10;

/// `phi(x0, b)`: the flow of `sigma` run for "time" `b`.
pub fn doss_flow(model: &VectorFieldModel, x0: f64, b: f64, ode_tol: f64) -> Result<f64> {
    check_model(model)?;
    let coefficients = model.coefficients();
    let (y, _) = ode::integrate(
        |_, y, dy| coefficients.sigma(y, 0, dy),
        0.0,
        &[x0],
        b,
        ode_tol,
    )?;
    Ok(y[0])
}

/// Exact solution at each grid point; each point is integrated from `b = 0`
/// independently, so the result depends only on the values `B_{t_i}`.
pub fn doss_exact(
    model: &VectorFieldModel,
    path: &[f64],
    grid: &Grid,
    ode_tol: f64,
) -> Result<Trajectory> {
    check_model(model)?;
    if path.len() != grid.steps() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "path has {} values, grid has {} points",
            path.len(),
            grid.steps() + 1
        )));
    }
    let x0 = model.initial()[0];
    let states = path
        .iter()
        .map(|&b| doss_flow(model, x0, b, ode_tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory::new(
        *grid,
        1,
        states,
        Provenance {
            method: "doss".into(),
            model: model.name().into(),
            stream: None,
        },
    ))
}

fn check_model(model: &VectorFieldModel) -> Result<()> {
    if model.supports_doss() {
        Ok(())
    } else {
        Err(Error::UnsupportedModel(format!(
            "Doss representation needs d = m = 1 and zero drift; '{}' has d = {}, m = {}{}",
            model.name(),
            model.dim(),
            model.drivers(),
            if model.is_driftless() {
                ""
            } else {
                " and a drift"
            }
        )))
    }
}
